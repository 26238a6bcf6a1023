//! Fully connected ReLU networks and their text weight format.
//!
//! ```text
//! mlp <d> <n> <L>
//! <rows> <cols>          one block per layer
//! <row-major weights>    one matrix row per line
//! <bias>
//! ```
//!
//! Values are written with 17 significant digits, so save/load is exact.

use std::fmt::Write as _;
use std::path::Path;

use super::ControllerError;

/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs. Parameters are
/// stored flat: for each layer the row-major weight matrix, then the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Result<Self, ControllerError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(ControllerError::Shape(format!("invalid layer sizes {sizes:?}")));
        }
        let n = sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        Ok(Mlp { sizes: sizes.to_vec(), params: vec![0.0; n] })
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self, ControllerError> {
        let mut m = Mlp::zeros(sizes)?;
        if params.len() != m.params.len() {
            return Err(ControllerError::Shape(format!("expected {} parameters, got {}", m.params.len(), params.len())));
        }
        m.params = params;
        Ok(m)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn offset(&self, layer: usize) -> usize {
        self.sizes[..layer + 1].windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// `(weights, bias)` of a layer; weights are `rows x cols` row-major.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (cols, rows) = (self.sizes[l], self.sizes[l + 1]);
        let o = self.offset(l);
        (&self.params[o..o + rows * cols], &self.params[o + rows * cols..o + rows * cols + rows])
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (cols, rows) = (self.sizes[l], self.sizes[l + 1]);
        let o = self.offset(l);
        let (w, rest) = self.params[o..o + rows * cols + rows].split_at_mut(rows * cols);
        (w, rest)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let mut a = x.to_vec();
        let last = self.layer_count() - 1;
        for l in 0..self.layer_count() {
            let (w, b) = self.layer(l);
            let cols = self.sizes[l];
            let mut z: Vec<f64> = b.to_vec();
            for (r, zr) in z.iter_mut().enumerate() {
                let row = &w[r * cols..(r + 1) * cols];
                *zr += row.iter().zip(&a).map(|(p, q)| p * q).sum::<f64>();
            }
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a
    }

    pub fn try_forward(&self, x: &[f64]) -> Result<Vec<f64>, ControllerError> {
        if x.len() != self.input_dim() {
            return Err(ControllerError::Shape(format!("network takes {} inputs, got {}", self.input_dim(), x.len())));
        }
        Ok(self.forward(x))
    }

    /// Which hidden units are active at `x`, layer by layer.
    pub fn activation_pattern(&self, x: &[f64]) -> Vec<bool> {
        let mut out = Vec::new();
        let mut a = x.to_vec();
        for l in 0..self.layer_count() - 1 {
            let (w, b) = self.layer(l);
            let cols = self.sizes[l];
            a = (0..self.sizes[l + 1])
                .map(|r| b[r] + w[r * cols..(r + 1) * cols].iter().zip(&a).map(|(p, q)| p * q).sum::<f64>())
                .collect();
            out.extend(a.iter().map(|&v| v > 0.0));
            a.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "mlp {} {} {}", self.input_dim(), self.output_dim(), self.layer_count()).unwrap();
        for l in 0..self.layer_count() {
            let (w, b) = self.layer(l);
            let (cols, rows) = (self.sizes[l], self.sizes[l + 1]);
            writeln!(s, "{rows} {cols}").unwrap();
            for r in 0..rows {
                let line: Vec<String> = w[r * cols..(r + 1) * cols].iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(s, "{}", line.join(" ")).unwrap();
            }
            let line: Vec<String> = b.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(s, "{}", line.join(" ")).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ControllerError> {
        let mut toks = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| line.split_whitespace().map(move |t| (i + 1, t)));
        let mut last_line = 1;
        let mut next = |what: &str| -> Result<(usize, &str), ControllerError> {
            let t = toks.next().ok_or_else(|| ControllerError::Parse { line: last_line, msg: format!("unexpected end of file, expected {what}") })?;
            last_line = t.0;
            Ok(t)
        };
        let (line, magic) = next("header")?;
        if magic != "mlp" {
            return Err(ControllerError::Parse { line, msg: format!("expected `mlp`, found `{magic}`") });
        }
        let d = parse_usize(next("input dimension")?)?;
        let n = parse_usize(next("output dimension")?)?;
        let layers = parse_usize(next("layer count")?)?;
        if layers == 0 {
            return Err(ControllerError::Parse { line, msg: "network needs at least one layer".into() });
        }
        let mut sizes = vec![d];
        let mut params = Vec::new();
        for l in 0..layers {
            let at = next("layer rows")?;
            let rows = parse_usize(at)?;
            let cols = parse_usize(next("layer cols")?)?;
            if cols != sizes[l] {
                return Err(ControllerError::Parse {
                    line: at.0,
                    msg: format!("layer {l} takes {cols} inputs but the previous layer has {} outputs", sizes[l]),
                });
            }
            for _ in 0..rows * cols + rows {
                params.push(parse_f64(next("parameter")?)?);
            }
            sizes.push(rows);
        }
        if sizes[layers] != n {
            return Err(ControllerError::Parse { line, msg: format!("header says {n} outputs, last layer has {}", sizes[layers]) });
        }
        if let Some((line, t)) = toks.next() {
            return Err(ControllerError::Parse { line, msg: format!("trailing token `{t}`") });
        }
        Mlp::from_params(&sizes, params)
    }

    pub fn save(&self, path: &Path) -> Result<(), ControllerError> {
        std::fs::write(path, self.to_text()).map_err(|e| ControllerError::Io(path.display().to_string(), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ControllerError> {
        let text = std::fs::read_to_string(path).map_err(|e| ControllerError::Io(path.display().to_string(), e.to_string()))?;
        Mlp::from_text(&text)
    }
}

fn parse_usize((line, t): (usize, &str)) -> Result<usize, ControllerError> {
    t.parse().map_err(|_| ControllerError::Parse { line, msg: format!("expected a non-negative integer, found `{t}`") })
}

fn parse_f64((line, t): (usize, &str)) -> Result<f64, ControllerError> {
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ControllerError::Parse { line, msg: format!("expected a finite number, found `{t}`") }),
    }
}
