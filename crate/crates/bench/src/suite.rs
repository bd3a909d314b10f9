//! Layer suites: the built-in reference layers and the line-oriented suite file.
//!
//! A suite file holds one JSON object per line:
//!
//! ```text
//! # comment lines and blank lines are ignored
//! {"name":"sd-640","filter":[3,3,640,640],"activation":[32,32,640,1],"padding":1,"repeats":10,"reference_speedup":2.76}
//! ```
//!
//! `filter` is `[KW, KH, IC, OC]` and `activation` is `[IW, IH, IC, N]`.
//! `reference_speedup` is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};
use winoconv::{ConvSpec, Shape};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SuiteError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub name: String,
    /// `[KW, KH, IC, OC]`
    pub filter: [usize; 4],
    /// `[IW, IH, IC, N]`
    pub activation: [usize; 4],
    pub padding: usize,
    pub repeats: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_speedup: Option<f64>,
}

impl LayerEntry {
    pub fn spec(&self) -> ConvSpec {
        let [kw, kh, ic, oc] = self.filter;
        ConvSpec {
            kernel_h: kh,
            kernel_w: kw,
            in_channels: ic,
            out_channels: oc,
            stride: 1,
            padding: self.padding,
        }
    }

    pub fn input_shape(&self) -> Shape {
        let [iw, ih, ic, n] = self.activation;
        Shape::new(n, ic, ih, iw)
    }

    fn validate(&self) -> Result<(), String> {
        let name = &self.name;
        if name.is_empty() {
            return Err("entry name is empty".into());
        }
        if self.filter.contains(&0) {
            return Err(format!(
                "entry `{name}`: filter dimensions must be positive, got {:?}",
                self.filter
            ));
        }
        if self.activation.contains(&0) {
            return Err(format!(
                "entry `{name}`: activation dimensions must be positive, got {:?}",
                self.activation
            ));
        }
        if self.filter[2] != self.activation[2] {
            return Err(format!(
                "entry `{name}`: activation IC {} does not match filter IC {}",
                self.activation[2], self.filter[2]
            ));
        }
        if self.filter[0] != 3 || self.filter[1] != 3 {
            return Err(format!(
                "entry `{name}`: only 3x3 filters are supported, got {}x{}",
                self.filter[0], self.filter[1]
            ));
        }
        if self.repeats == 0 {
            return Err(format!("entry `{name}`: repeats must be at least 1"));
        }
        let [iw, ih, ..] = self.activation;
        if ih + 2 * self.padding < 3 || iw + 2 * self.padding < 3 {
            return Err(format!(
                "entry `{name}`: padded activation is smaller than the filter"
            ));
        }
        if let Some(s) = self.reference_speedup {
            if !(s.is_finite() && s > 0.0) {
                return Err(format!(
                    "entry `{name}`: reference_speedup must be positive, got {s}"
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerSuite {
    pub entries: Vec<LayerEntry>,
}

/// The five reference layers, padding 1, batch 1.
pub fn builtin_suite() -> LayerSuite {
    let entry = |name: &str, ic: usize, oc: usize, hw: usize, reference: f64| LayerEntry {
        name: name.to_string(),
        filter: [3, 3, ic, oc],
        activation: [hw, hw, ic, 1],
        padding: 1,
        repeats: 10,
        reference_speedup: Some(reference),
    };
    LayerSuite {
        entries: vec![
            entry("conv3x3-640-640-32", 640, 640, 32, 2.76),
            entry("conv3x3-1280-1280-16", 1280, 1280, 16, 2.27),
            entry("conv3x3-2560-1280-16", 2560, 1280, 16, 2.20),
            entry("conv3x3-320-320-64", 320, 320, 64, 2.09),
            entry("conv3x3-640-320-64", 640, 320, 64, 2.07),
        ],
    }
}

pub fn parse_suite_str(text: &str) -> Result<LayerSuite, SuiteError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let entry: LayerEntry = serde_json::from_str(trimmed).map_err(|e| SuiteError::Line {
            line,
            message: match entry_name(trimmed) {
                Some(name) => format!("entry `{name}`: {e}"),
                None => e.to_string(),
            },
        })?;
        entry
            .validate()
            .map_err(|message| SuiteError::Line { line, message })?;
        if entries.iter().any(|e: &LayerEntry| e.name == entry.name) {
            return Err(SuiteError::Line {
                line,
                message: format!("duplicate entry name `{}`", entry.name),
            });
        }
        entries.push(entry);
    }
    Ok(LayerSuite { entries })
}

pub fn parse_suite(path: &Path) -> Result<LayerSuite, SuiteError> {
    let text = std::fs::read_to_string(path).map_err(|e| SuiteError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_suite_str(&text)
}

/// Suite file text, one entry per line.
pub fn serialize_suite(suite: &LayerSuite) -> String {
    let mut out = String::new();
    for e in &suite.entries {
        out.push_str(&serde_json::to_string(e).expect("entries always serialize"));
        out.push('\n');
    }
    out
}

fn entry_name(line: &str) -> Option<String> {
    let value: serde_json::Value = serde_json::from_str(line).ok()?;
    value.get("name")?.as_str().map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_matches_reference_layers() {
        let s = builtin_suite();
        assert_eq!(s.entries.len(), 5);
        assert_eq!(s.entries[0].filter, [3, 3, 640, 640]);
        assert_eq!(s.entries[0].activation, [32, 32, 640, 1]);
        assert_eq!(s.entries[2].filter, [3, 3, 2560, 1280]);
        assert_eq!(s.entries[2].activation, [16, 16, 2560, 1]);
        assert_eq!(s.entries[4].filter, [3, 3, 640, 320]);
        assert_eq!(s.entries[4].activation, [64, 64, 640, 1]);
        let refs: Vec<f64> = s
            .entries
            .iter()
            .map(|e| e.reference_speedup.unwrap())
            .collect();
        assert_eq!(refs, [2.76, 2.27, 2.20, 2.09, 2.07]);
        assert!(s
            .entries
            .iter()
            .all(|e| e.padding == 1 && e.activation[3] == 1));
    }

    #[test]
    fn round_trip() {
        let s = builtin_suite();
        assert_eq!(parse_suite_str(&serialize_suite(&s)).unwrap(), s);
    }

    #[test]
    fn empty_and_comment_only_files_are_valid() {
        assert_eq!(parse_suite_str("").unwrap(), LayerSuite::default());
        assert_eq!(
            parse_suite_str("# nothing\n\n   \n").unwrap(),
            LayerSuite::default()
        );
    }

    #[test]
    fn channel_mismatch_names_both_values() {
        let text = "# header\n{\"name\":\"bad\",\"filter\":[3,3,4,8],\"activation\":[8,8,3,1],\"padding\":1,\"repeats\":1}\n";
        let err = parse_suite_str(text).unwrap_err();
        assert_eq!(
            err,
            SuiteError::Line {
                line: 2,
                message: "entry `bad`: activation IC 3 does not match filter IC 4".into()
            }
        );
    }

    #[test]
    fn missing_field_names_the_entry() {
        let text = "{\"name\":\"x\",\"filter\":[3,3,4,8],\"activation\":[8,8,4,1],\"repeats\":1}";
        let msg = parse_suite_str(text).unwrap_err().to_string();
        assert!(
            msg.starts_with("line 1: entry `x`: missing field `padding`"),
            "{msg}"
        );
    }

    #[test]
    fn other_validation_errors() {
        let base = LayerEntry {
            name: "e".into(),
            filter: [3, 3, 2, 2],
            activation: [4, 4, 2, 1],
            padding: 1,
            repeats: 1,
            reference_speedup: None,
        };
        let bad = |f: &dyn Fn(&mut LayerEntry)| {
            let mut e = base.clone();
            f(&mut e);
            let text = serialize_suite(&LayerSuite { entries: vec![e] });
            parse_suite_str(&text).unwrap_err().to_string()
        };
        assert!(bad(&|e| e.activation[0] = 0).contains("must be positive"));
        assert!(bad(&|e| e.filter[3] = 0).contains("must be positive"));
        assert!(bad(&|e| e.repeats = 0).contains("repeats"));
        assert!(bad(&|e| e.filter[0] = 5).contains("3x3"));
        assert!(bad(&|e| e.reference_speedup = Some(-1.0)).contains("reference_speedup"));
        assert!(parse_suite_str("{\"name\":\"e\"")
            .unwrap_err()
            .to_string()
            .starts_with("line 1:"));
        let dup = serialize_suite(&LayerSuite {
            entries: vec![base.clone(), base],
        });
        assert!(parse_suite_str(&dup)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
    }
}
