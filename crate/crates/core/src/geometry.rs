use crate::error::{Error, Result};
use crate::tensor::Shape;

/// Convolution geometry. Padding is symmetric zero padding on all four sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConvSpec {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvSpec {
    /// A stride-1 3×3 convolution with the given padding.
    pub const fn conv3x3(in_channels: usize, out_channels: usize, padding: usize) -> Self {
        Self {
            kernel_h: 3,
            kernel_w: 3,
            in_channels,
            out_channels,
            stride: 1,
            padding,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_h == 0 || self.kernel_w == 0 {
            return Err(Error::InvalidGeometry(
                "kernel dimensions must be at least 1".into(),
            ));
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::InvalidGeometry(
                "channel counts must be at least 1".into(),
            ));
        }
        if self.stride == 0 {
            return Err(Error::InvalidGeometry("stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Filter tensor shape `(OC, IC, KH, KW)`.
    pub fn filter_shape(&self) -> Shape {
        Shape::new(
            self.out_channels,
            self.in_channels,
            self.kernel_h,
            self.kernel_w,
        )
    }

    /// Output spatial size `(OH, OW)` for an `h×w` input.
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        self.validate()?;
        let axis = |len: usize, k: usize, name: &str| {
            let padded = len + 2 * self.padding;
            if padded < k {
                return Err(Error::InvalidGeometry(format!(
                    "padded {name} {padded} is smaller than the kernel ({k})"
                )));
            }
            Ok((padded - k) / self.stride + 1)
        };
        Ok((
            axis(h, self.kernel_h, "height")?,
            axis(w, self.kernel_w, "width")?,
        ))
    }

    /// Checks `input` and `filters` against this geometry and returns the output shape.
    pub fn check(&self, input: Shape, filters: Shape) -> Result<Shape> {
        self.validate()?;
        if input.c != self.in_channels {
            return Err(Error::InvalidGeometry(format!(
                "input has {} channels, convolution expects {}",
                input.c, self.in_channels
            )));
        }
        if filters != self.filter_shape() {
            return Err(Error::ShapeMismatch {
                left: filters,
                right: self.filter_shape(),
            });
        }
        let (oh, ow) = self.output_hw(input.h, input.w)?;
        Ok(Shape::new(input.n, self.out_channels, oh, ow))
    }

    pub fn is_winograd_eligible(&self) -> Result<()> {
        self.validate()?;
        if self.kernel_h != 3 || self.kernel_w != 3 {
            return Err(Error::NotWinogradEligible(format!(
                "kernel is {}x{}, need 3x3",
                self.kernel_h, self.kernel_w
            )));
        }
        if self.stride != 1 {
            return Err(Error::NotWinogradEligible(format!(
                "stride is {}, need 1",
                self.stride
            )));
        }
        Ok(())
    }
}
