//! Interpretability reports for saved models.

use std::fmt::Write as _;

use serde::Serialize;

use cfn_core::composition::{render_text, LayerRecord, NetworkRecord};
use cfn_core::model::ModelFile;
use cfn_core::nodes::Sinusoidal;
use cfn_core::Result;

/// The learned curve of a one-input, one-sinusoid model, written as `A·sin(ω·t + φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForm {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl ClosedForm {
    pub const TEMPLATE: &'static str = "x(t) = A·sin(ω·t + φ)";

    /// Recognizes a network that is a single one-dimensional Sinusoidal node.
    pub fn of(net: &NetworkRecord) -> Option<Self> {
        let [LayerRecord::Sequential { nodes }] = &net.layers[..] else {
            return None;
        };
        let [node] = &nodes[..] else {
            return None;
        };
        if node.kind != "Sinusoidal" || node.input_dim != 1 {
            return None;
        }
        let (amplitude, omega, phase) = Sinusoidal::from_record(node).ok()?.canonical_1d()?;
        Some(Self {
            amplitude,
            omega,
            phase,
        })
    }

    pub fn expression(&self) -> String {
        format!("x(t) = {:.4}·sin({:.4}·t + {:.4})", self.amplitude, self.omega, self.phase)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<'a> {
    pub format_version: u64,
    pub metadata: &'a std::collections::BTreeMap<String, serde_json::Value>,
    pub network: &'a NetworkRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedForm>,
}

impl<'a> Report<'a> {
    pub fn new(file: &'a ModelFile) -> Self {
        Self {
            format_version: file.format_version,
            metadata: &file.metadata,
            network: &file.network,
            closed_form: ClosedForm::of(&file.network),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| cfn_core::CfnError::Format(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in ["preset", "task", "target"] {
            if let Some(v) = self.metadata.get(key).and_then(|v| v.as_str()) {
                let _ = writeln!(out, "{key}: {v}");
            }
        }
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&render_text(self.network));
        if let Some(c) = &self.closed_form {
            let _ = writeln!(out, "\nLearned expression:");
            let _ = writeln!(out, "  {}", ClosedForm::TEMPLATE);
            let _ = writeln!(out, "  {}", c.expression());
            let _ = writeln!(out, "Amplitude (A): {:.4}", c.amplitude);
            let _ = writeln!(out, "Angular frequency (ω): {:.4}", c.omega);
            let _ = writeln!(out, "Phase (φ): {:.4}", c.phase);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfn_core::composition::{Network, SequentialLayer};

    fn sine_file(a: f64, w: f64, p: f64, d: f64) -> ModelFile {
        let layer = SequentialLayer::new(vec![Box::new(Sinusoidal::new(a, w, p, vec![d]))]).unwrap();
        ModelFile::new(&Network::new(vec![layer.into()]).unwrap(), None)
    }

    #[test]
    fn sine_model_gets_a_formula() {
        let file = sine_file(-2.0, 1.5, 0.3, -1.0);
        let text = Report::new(&file).to_text();
        assert!(text.contains("x(t) = A·sin(ω·t + φ)"), "{text}");
        assert!(text.contains("Amplitude (A): 2.0000"), "{text}");
        assert!(text.contains("Angular frequency (ω): 1.5000"), "{text}");
        let json: serde_json::Value = serde_json::from_str(&Report::new(&file).to_json().unwrap()).unwrap();
        assert_eq!(json["closed_form"]["amplitude"], 2.0);
    }

    #[test]
    fn other_models_have_no_formula() {
        let layer = SequentialLayer::new(vec![Box::new(cfn_core::nodes::Relu::new(1))]).unwrap();
        let file = ModelFile::new(&Network::new(vec![layer.into()]).unwrap(), None);
        assert!(Report::new(&file).closed_form.is_none());
        assert!(!Report::new(&file).to_text().contains("Learned expression"));
    }
}
