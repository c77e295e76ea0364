use super::{GruCell, LayerSpec, Net, NnError, Parameterized};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub model_kind: String,
    /// Shape of every tensor, in tensor order.
    pub layer_shapes: Vec<Vec<usize>>,
    pub seed: u64,
    pub train_steps: u64,
    /// Resolved configuration the model was trained with.
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// JSON tensor dump with a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub manifest: Manifest,
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn new(model_kind: impl Into<String>, seed: u64, train_steps: u64, config: serde_json::Value) -> Self {
        Self {
            manifest: Manifest {
                model_kind: model_kind.into(),
                layer_shapes: Vec::new(),
                seed,
                train_steps,
                config,
            },
            tensors: Vec::new(),
        }
    }

    fn push(&mut self, name: String, shape: Vec<usize>, data: &[f64]) {
        self.manifest.layer_shapes.push(shape.clone());
        self.tensors.push(Tensor {
            name,
            shape,
            data: data.to_vec(),
        });
    }

    pub fn push_net(&mut self, name: &str, net: &Net) {
        let mut off = 0;
        for (i, l) in net.layers().iter().enumerate() {
            let nw = l.inputs * l.outputs;
            self.push(format!("{name}.{i}.w"), vec![l.inputs, l.outputs], &net.params()[off..off + nw]);
            self.push(format!("{name}.{i}.b"), vec![l.outputs], &net.params()[off + nw..off + nw + l.outputs]);
            off += nw + l.outputs;
        }
    }

    pub fn push_gru(&mut self, name: &str, cell: &GruCell) {
        let (i, h) = (cell.input_dim(), cell.hidden_dim());
        let p = cell.params();
        let (nw, nu) = (i * 3 * h, h * 3 * h);
        self.push(format!("{name}.w"), vec![i, 3 * h], &p[..nw]);
        self.push(format!("{name}.u"), vec![h, 3 * h], &p[nw..nw + nu]);
        self.push(format!("{name}.b"), vec![3 * h], &p[nw + nu..]);
    }

    fn tensor(&self, name: &str, shape: &[usize]) -> Result<&[f64], NnError> {
        let t = self
            .tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| NnError::Checkpoint(format!("missing tensor {name}")))?;
        if t.shape != shape {
            return Err(NnError::Checkpoint(format!(
                "tensor {name} has shape {:?}, expected {:?}",
                t.shape, shape
            )));
        }
        Ok(&t.data)
    }

    /// Rebuilds a network with the expected architecture, rejecting any
    /// shape disagreement.
    pub fn net(&self, name: &str, layers: &[LayerSpec]) -> Result<Net, NnError> {
        let mut params = Vec::new();
        for (i, l) in layers.iter().enumerate() {
            params.extend_from_slice(self.tensor(&format!("{name}.{i}.w"), &[l.inputs, l.outputs])?);
            params.extend_from_slice(self.tensor(&format!("{name}.{i}.b"), &[l.outputs])?);
        }
        if self.tensors.iter().any(|t| t.name == format!("{name}.{}.w", layers.len())) {
            return Err(NnError::Checkpoint(format!("{name} has more layers than expected")));
        }
        Net::from_params(layers.to_vec(), params)
    }

    pub fn gru(&self, name: &str, input: usize, hidden: usize) -> Result<GruCell, NnError> {
        let mut params = Vec::new();
        params.extend_from_slice(self.tensor(&format!("{name}.w"), &[input, 3 * hidden])?);
        params.extend_from_slice(self.tensor(&format!("{name}.u"), &[hidden, 3 * hidden])?);
        params.extend_from_slice(self.tensor(&format!("{name}.b"), &[3 * hidden])?);
        GruCell::from_params(input, hidden, params)
    }

    /// Internal consistency: manifest shapes match tensors and data lengths
    /// match shapes.
    pub fn validate(&self) -> Result<(), NnError> {
        if self.manifest.layer_shapes.len() != self.tensors.len() {
            return Err(NnError::Checkpoint("manifest and tensor count differ".into()));
        }
        for (t, s) in self.tensors.iter().zip(&self.manifest.layer_shapes) {
            if &t.shape != s {
                return Err(NnError::Checkpoint(format!("manifest shape mismatch for {}", t.name)));
            }
            if t.data.len() != t.shape.iter().product::<usize>() {
                return Err(NnError::Checkpoint(format!("tensor {} has wrong element count", t.name)));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(NnError::Checkpoint(format!("tensor {} is not finite", t.name)));
            }
        }
        Ok(())
    }

    pub fn expect_kind(&self, kind: &str) -> Result<(), NnError> {
        if self.manifest.model_kind != kind {
            return Err(NnError::Checkpoint(format!(
                "expected a {kind} checkpoint, found {}",
                self.manifest.model_kind
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, NnError> {
        let ck: Self = serde_json::from_str(s).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        ck.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        crate::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let s = std::fs::read_to_string(path).map_err(|e| NnError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_and_shape_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Net::mlp(&[4, 3, 2], Activation::Relu, Activation::Tanh, &mut rng);
        let gru = GruCell::new(5, 2, &mut rng);
        let mut ck = Checkpoint::new("test", 1, 42, serde_json::json!({"k": 1}));
        ck.push_net("actor", &net);
        ck.push_gru("gru0", &gru);
        let back = Checkpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.net("actor", net.layers()).unwrap(), net);
        assert_eq!(back.gru("gru0", 5, 2).unwrap(), gru);
        assert_eq!(back.manifest.layer_shapes[0], vec![4, 3]);

        let mut wrong = net.layers().to_vec();
        wrong[0].outputs = 4;
        wrong[1].inputs = 4;
        assert!(back.net("actor", &wrong).is_err());
        assert!(back.net("actor", &net.layers()[..1]).is_err());
        assert!(back.gru("gru0", 5, 3).is_err());
        assert!(back.expect_kind("vae").is_err());

        let mut broken = ck.clone();
        broken.tensors[0].data.pop();
        assert!(Checkpoint::from_json(&broken.to_json()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Net::mlp(&[2, 2], Activation::Linear, Activation::Linear, &mut rng);
        let mut ck = Checkpoint::new("net", 2, 0, serde_json::Value::Null);
        ck.push_net("n", &net);
        let path = dir.path().join("ck.json");
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    }
}
