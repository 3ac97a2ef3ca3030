//! Weight files: versioned JSON with named arrays.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GnnError, HiddenLayer, ModelParams, Readout, HIDDEN, ROUNDS};
use crate::scenegraph::FeatureSpec;

pub const WEIGHTS_FORMAT: &str = "namoplan-gnn-weights";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct WeightFile {
    format: String,
    version: u32,
    feature_spec: FeatureSpec,
    fingerprint: String,
    hidden: usize,
    rounds: usize,
    tied: bool,
    node_encoder: LayerFile,
    edge_encoder: LayerFile,
    edge_update: Vec<LayerFile>,
    node_update: Vec<LayerFile>,
    decoder: ReadoutFile,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    /// One row per output unit.
    weight: Vec<Vec<f64>>,
    bias: Vec<f64>,
    gain: Vec<f64>,
    shift: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ReadoutFile {
    weight: Vec<f64>,
    bias: f64,
}

impl LayerFile {
    fn from_layer(l: &HiddenLayer) -> Self {
        LayerFile {
            weight: l.weight.chunks(l.inputs).map(<[f64]>::to_vec).collect(),
            bias: l.bias.clone(),
            gain: l.gain.clone(),
            shift: l.shift.clone(),
        }
    }

    fn into_layer(self, name: &str, inputs: usize, outputs: usize) -> Result<HiddenLayer, GnnError> {
        let shape = |what: &str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(GnnError::Shape(format!("{name}.{what}: expected {expected} values, found {found}")))
            }
        };
        shape("weight rows", outputs, self.weight.len())?;
        for (r, row) in self.weight.iter().enumerate() {
            shape(&format!("weight[{r}]"), inputs, row.len())?;
        }
        shape("bias", outputs, self.bias.len())?;
        shape("gain", outputs, self.gain.len())?;
        shape("shift", outputs, self.shift.len())?;
        Ok(HiddenLayer {
            inputs,
            outputs,
            weight: self.weight.concat(),
            bias: self.bias,
            gain: self.gain,
            shift: self.shift,
        })
    }
}

pub fn to_json(params: &ModelParams) -> String {
    let spec = FeatureSpec::current();
    let file = WeightFile {
        format: WEIGHTS_FORMAT.into(),
        version: WEIGHTS_VERSION,
        fingerprint: spec.fingerprint(),
        feature_spec: spec,
        hidden: HIDDEN,
        rounds: ROUNDS,
        tied: params.is_tied(),
        node_encoder: LayerFile::from_layer(&params.node_encoder),
        edge_encoder: LayerFile::from_layer(&params.edge_encoder),
        edge_update: params.edge_update.iter().map(LayerFile::from_layer).collect(),
        node_update: params.node_update.iter().map(LayerFile::from_layer).collect(),
        decoder: ReadoutFile {
            weight: params.decoder.weight.clone(),
            bias: params.decoder.bias,
        },
    };
    serde_json::to_string_pretty(&file).expect("serializable") + "\n"
}

pub fn from_json(text: &str) -> Result<ModelParams, GnnError> {
    let file: WeightFile = serde_json::from_str(text).map_err(|e| GnnError::Format(e.to_string()))?;
    if file.format != WEIGHTS_FORMAT || file.version != WEIGHTS_VERSION {
        return Err(GnnError::Format(format!(
            "expected {WEIGHTS_FORMAT} v{WEIGHTS_VERSION}, found {} v{}",
            file.format, file.version
        )));
    }
    let spec = FeatureSpec::current();
    let dims = |s: &FeatureSpec| (s.node_dim, s.edge_dim);
    if dims(&file.feature_spec) != dims(&spec) {
        return Err(GnnError::FeatureMismatch {
            expected: dims(&spec),
            found: dims(&file.feature_spec),
        });
    }
    if file.feature_spec != spec || file.fingerprint != spec.fingerprint() {
        return Err(GnnError::Format("feature layout differs from this build".into()));
    }
    if file.hidden != HIDDEN || file.rounds != ROUNDS {
        return Err(GnnError::Shape(format!(
            "expected hidden {HIDDEN} and {ROUNDS} rounds, found {} and {}",
            file.hidden, file.rounds
        )));
    }
    let copies = if file.tied { 1 } else { ROUNDS };
    if file.edge_update.len() != copies || file.node_update.len() != copies {
        return Err(GnnError::Shape(format!("expected {copies} round layer(s)")));
    }
    let layers = |v: Vec<LayerFile>, name: &str, inputs: usize| {
        v.into_iter()
            .enumerate()
            .map(|(i, l)| l.into_layer(&format!("{name}[{i}]"), inputs, HIDDEN))
            .collect::<Result<Vec<_>, _>>()
    };
    if file.decoder.weight.len() != HIDDEN {
        return Err(GnnError::Shape(format!(
            "decoder.weight: expected {HIDDEN} values, found {}",
            file.decoder.weight.len()
        )));
    }
    let params = ModelParams {
        node_encoder: file.node_encoder.into_layer("nodeEncoder", spec.node_dim, HIDDEN)?,
        edge_encoder: file.edge_encoder.into_layer("edgeEncoder", spec.edge_dim, HIDDEN)?,
        edge_update: layers(file.edge_update, "edgeUpdate", 3 * HIDDEN)?,
        node_update: layers(file.node_update, "nodeUpdate", 2 * HIDDEN)?,
        decoder: Readout {
            weight: file.decoder.weight,
            bias: file.decoder.bias,
        },
    };
    if !params.is_finite() {
        return Err(GnnError::Format("non-finite parameter".into()));
    }
    Ok(params)
}

pub fn save(params: &ModelParams, path: &Path) -> Result<(), GnnError> {
    fs::write(path, to_json(params)).map_err(|e| GnnError::Io(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<ModelParams, GnnError> {
    let text = fs::read_to_string(path).map_err(|e| GnnError::Io(format!("{}: {e}", path.display())))?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        for tied in [true, false] {
            let p = ModelParams::init_with(42, tied);
            assert_eq!(from_json(&to_json(&p)).unwrap(), p);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        let p = ModelParams::init(7);
        save(&p, &path).unwrap();
        assert_eq!(load(&path).unwrap(), p);
    }

    #[test]
    fn truncated_text_is_rejected() {
        let text = to_json(&ModelParams::init(1));
        let cut = &text[..text.len() / 2];
        assert!(matches!(from_json(cut), Err(GnnError::Format(_))));
    }

    #[test]
    fn short_row_is_a_shape_error() {
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&ModelParams::init(1))).unwrap();
        v["nodeUpdate"][0]["weight"][3].as_array_mut().unwrap().pop();
        assert!(matches!(from_json(&v.to_string()), Err(GnnError::Shape(_))));
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&ModelParams::init(1))).unwrap();
        v["edgeEncoder"]["bias"].as_array_mut().unwrap().truncate(10);
        assert!(matches!(from_json(&v.to_string()), Err(GnnError::Shape(_))));
    }

    #[test]
    fn other_feature_dims_are_rejected_with_both_sizes() {
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&ModelParams::init(1))).unwrap();
        v["featureSpec"]["nodeDim"] = 25.into();
        assert_eq!(
            from_json(&v.to_string()),
            Err(GnnError::FeatureMismatch {
                expected: (21, 16),
                found: (25, 16)
            })
        );
    }
}
