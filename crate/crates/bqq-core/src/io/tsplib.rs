//! TSPLIB EUC_2D instances and their integer distance matrices.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// A Euclidean TSP instance: named 2-D city coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    pub name: String,
    pub node_coords: Vec<(f64, f64)>,
}

impl TspInstance {
    pub fn new(name: String, node_coords: Vec<(f64, f64)>) -> Result<Self> {
        if node_coords.len() < 2 {
            return Err(Error::invalid("a TSP instance needs at least two nodes"));
        }
        for &(x, y) in &node_coords {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::invalid("non-finite node coordinate"));
            }
        }
        Ok(Self { name, node_coords })
    }

    pub fn len(&self) -> usize {
        self.node_coords.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// TSPLIB EUC_2D rounding: `nint(d) = floor(d + 0.5)`.
fn euc_2d(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    ((dx * dx + dy * dy).sqrt() + 0.5).floor()
}

/// Symmetric inter-city distance matrix with zero diagonal.
pub fn distance_matrix(inst: &TspInstance) -> DenseMatrix {
    let n = inst.node_coords.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euc_2d(inst.node_coords[i], inst.node_coords[j]);
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DenseMatrix::from_vec_unchecked(n, n, values)
}

pub fn parse_tsplib(text: &str) -> Result<TspInstance> {
    let mut name = String::new();
    let mut dimension: Option<usize> = None;
    let mut edge_weight_type: Option<String> = None;
    let mut coords: Vec<(f64, f64)> = Vec::new();
    let mut in_coords = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        if !in_coords {
            if line == "NODE_COORD_SECTION" {
                in_coords = true;
                continue;
            }
            if let Some((key, value)) = line.split_once(':') {
                let key = key.trim();
                let value = value.trim();
                match key {
                    "NAME" => name = value.to_string(),
                    "DIMENSION" => {
                        dimension = Some(value.parse().map_err(|_| Error::TextParse {
                            line: lineno,
                            message: format!("invalid DIMENSION value '{value}'"),
                        })?)
                    }
                    "EDGE_WEIGHT_TYPE" => edge_weight_type = Some(value.to_string()),
                    _ => {} // TYPE, COMMENT, and friends are irrelevant here
                }
            }
            continue;
        }
        if line == "EOF" {
            break;
        }
        let mut parts = line.split_whitespace();
        let _id = parts.next();
        let x = parts.next();
        let y = parts.next();
        match (x, y) {
            (Some(x), Some(y)) => {
                let x: f64 = x.parse().map_err(|_| Error::TextParse {
                    line: lineno,
                    message: format!("invalid x coordinate '{x}'"),
                })?;
                let y: f64 = y.parse().map_err(|_| Error::TextParse {
                    line: lineno,
                    message: format!("invalid y coordinate '{y}'"),
                })?;
                coords.push((x, y));
            }
            _ => {
                return Err(Error::TextParse {
                    line: lineno,
                    message: format!("malformed coordinate line '{line}'"),
                })
            }
        }
    }

    match edge_weight_type.as_deref() {
        Some("EUC_2D") => {}
        Some(other) => {
            return Err(Error::UnsupportedFormat(format!(
                "EDGE_WEIGHT_TYPE {other} (only EUC_2D is supported)"
            )))
        }
        None => {
            return Err(Error::UnsupportedFormat(
                "missing EDGE_WEIGHT_TYPE (only EUC_2D is supported)".into(),
            ))
        }
    }
    if !in_coords {
        return Err(Error::UnsupportedFormat(
            "missing NODE_COORD_SECTION".into(),
        ));
    }
    if let Some(d) = dimension {
        if d != coords.len() {
            return Err(Error::invalid(format!(
                "DIMENSION says {d} nodes but {} coordinate lines were found",
                coords.len()
            )));
        }
    }
    TspInstance::new(name, coords)
}

/// Render an instance back to TSPLIB text (EUC_2D).
pub fn write_tsplib(inst: &TspInstance) -> String {
    let mut out = String::new();
    out.push_str(&format!("NAME : {}\n", inst.name));
    out.push_str("TYPE : TSP\n");
    out.push_str(&format!("DIMENSION : {}\n", inst.node_coords.len()));
    out.push_str("EDGE_WEIGHT_TYPE : EUC_2D\n");
    out.push_str("NODE_COORD_SECTION\n");
    for (i, (x, y)) in inst.node_coords.iter().enumerate() {
        out.push_str(&format!("{} {} {}\n", i + 1, x, y));
    }
    out.push_str("EOF\n");
    out
}
