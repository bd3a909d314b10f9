use crate::error::{Error, Result};
use crate::geometry::ConvSpec;
use crate::tensor::Tensor;
use crate::transforms::filter_transform_into;

use super::WinogradPlan;

/// Transformed filters in position-major `[alpha²][OC][IC]` order.
///
/// Entry `(x, oc, ic)` is element `x` of `G·g·Gᵀ` for filter `(oc, ic)`,
/// computed in f64 and rounded once to f32. Build it once and reuse it
/// across calls with the same weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedFilterBank {
    data: Vec<f32>,
    spec: ConvSpec,
    m: usize,
    alpha: usize,
}

pub fn transform_filters(filters: &Tensor, plan: &WinogradPlan) -> Result<TransformedFilterBank> {
    let spec = *plan.spec();
    if filters.shape() != spec.filter_shape() {
        return Err(Error::ShapeMismatch {
            left: filters.shape(),
            right: spec.filter_shape(),
        });
    }
    let (oc_n, ic_n) = (spec.out_channels, spec.in_channels);
    let alpha = plan.alpha();
    let ts = plan.transforms();
    let f = filters.channel_major_f32();
    let plane = oc_n * ic_n;
    let mut data = vec![0.0f32; alpha * alpha * plane];
    let mut u = [0.0f64; 36];
    for oc in 0..oc_n {
        for ic in 0..ic_n {
            let src = &f[(oc * ic_n + ic) * 9..][..9];
            let g: [f64; 9] = std::array::from_fn(|i| src[i] as f64);
            filter_transform_into(ts, &g, &mut u);
            for (x, &v) in u[..alpha * alpha].iter().enumerate() {
                data[x * plane + oc * ic_n + ic] = v as f32;
            }
        }
    }
    Ok(TransformedFilterBank {
        data,
        spec,
        m: plan.m(),
        alpha,
    })
}

impl TransformedFilterBank {
    #[inline]
    pub fn get(&self, x: usize, oc: usize, ic: usize) -> f32 {
        self.data[(x * self.spec.out_channels + oc) * self.spec.in_channels + ic]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// The geometry the bank was built for.
    pub fn spec(&self) -> &ConvSpec {
        &self.spec
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub(crate) fn check(&self, plan: &WinogradPlan) -> Result<()> {
        if self.spec != *plan.spec() || self.m != plan.m() {
            return Err(Error::InvalidGeometry(format!(
                "filter bank built for {:?} with m={}, plan is {:?} with m={}",
                self.spec,
                self.m,
                plan.spec(),
                plan.m()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::plan;
    use crate::rng::CounterRng;
    use crate::tensor::{make_tensor, DType, Fill, Layout, Shape};
    use crate::transforms::{filter_transform, Mat};

    #[test]
    fn zero_filters_zero_bank() {
        let spec = ConvSpec::conv3x3(3, 2, 1);
        let p = plan(&spec, Shape::new(1, 3, 6, 6), 4, 32768).unwrap();
        let f = make_tensor(
            spec.filter_shape(),
            Layout::ChannelMajor,
            DType::F32,
            Fill::Zeros,
        )
        .unwrap();
        let bank = transform_filters(&f, &p).unwrap();
        assert_eq!(bank.data().len(), 36 * 6);
        assert!(bank.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn delta_filter_bank_is_g_delta_gt() {
        let spec = ConvSpec::conv3x3(1, 1, 1);
        let p = plan(&spec, Shape::new(1, 1, 4, 4), 2, 32768).unwrap();
        let mut d = vec![0.0; 9];
        d[4] = 1.0;
        let f = Tensor::from_vec(spec.filter_shape(), Layout::ChannelMajor, d).unwrap();
        let bank = transform_filters(&f, &p).unwrap();
        // Middle column of G is (0, ½, -½, 0).
        let c = [0.0, 0.5, -0.5, 0.0];
        for x in 0..16 {
            assert_eq!(bank.get(x, 0, 0), (c[x / 4] * c[x % 4]) as f32);
        }
    }

    #[test]
    fn bank_matches_per_filter_transform() {
        let spec = ConvSpec::conv3x3(13, 11, 1);
        let p = plan(&spec, Shape::new(1, 13, 8, 8), 4, 32768).unwrap();
        let f = make_tensor(
            spec.filter_shape(),
            Layout::ChannelMajor,
            DType::F32,
            Fill::SeededUniform {
                seed: 77,
                lo: -1.0,
                hi: 1.0,
            },
        )
        .unwrap();
        let bank = transform_filters(&f, &p).unwrap();
        let rng = CounterRng::new(5);
        for i in 0..100 {
            let oc = rng.range_usize(2 * i, 0, 10);
            let ic = rng.range_usize(2 * i + 1, 0, 12);
            let g = Mat::new(
                3,
                3,
                (0..9).map(|k| f.get(oc, ic, k / 3, k % 3) as f64).collect(),
            )
            .unwrap();
            let u = filter_transform(&g, p.transforms()).unwrap();
            for x in 0..36 {
                assert_eq!(bank.get(x, oc, ic), u.data()[x] as f32);
            }
        }
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let spec = ConvSpec::conv3x3(2, 2, 1);
        let p = plan(&spec, Shape::new(1, 2, 4, 4), 2, 32768).unwrap();
        let f = make_tensor(
            Shape::new(2, 3, 3, 3),
            Layout::ChannelMajor,
            DType::F32,
            Fill::Zeros,
        )
        .unwrap();
        assert!(transform_filters(&f, &p).is_err());
    }
}
