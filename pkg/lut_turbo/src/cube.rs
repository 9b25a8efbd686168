//! `.cube` parsing with line-accurate errors, kept semantically identical to
//! the reference implementation (the shared fixtures in ../fixtures/cube
//! assert the same accept/reject decisions and error line numbers).

use std::fmt;

/// n^3 RGB entries in [0,1], red index fastest (the `.cube` on-disk order).
#[derive(Debug)]
pub struct PackedLut {
    pub n: usize,
    pub data: Vec<f32>,
}

#[derive(Debug)]
pub struct CubeError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for CubeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for CubeError {}

fn err(line: usize, message: impl Into<String>) -> CubeError {
    CubeError { line, message: message.into() }
}

pub fn parse_cube(text: &str) -> Result<PackedLut, CubeError> {
    let mut n: Option<usize> = None;
    let mut data: Vec<f32> = Vec::new();
    let mut last_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let head = line.split_whitespace().next().unwrap();
        match head {
            "TITLE" => continue,
            "LUT_3D_SIZE" => {
                let parts: Vec<&str> = line.split_whitespace().collect();
                let size = (parts.len() == 2)
                    .then(|| parts[1].parse::<usize>().ok())
                    .flatten()
                    .ok_or_else(|| err(lineno, format!("malformed LUT_3D_SIZE: {line:?}")))?;
                if size < 2 {
                    return Err(err(lineno, format!("LUT_3D_SIZE must be >= 2, got {size}")));
                }
                n = Some(size);
                continue;
            }
            "DOMAIN_MIN" | "DOMAIN_MAX" => {
                let want = if head == "DOMAIN_MIN" { 0.0 } else { 1.0 };
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .skip(1)
                    .map(|v| v.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err(lineno, format!("malformed {head}: {line:?}")))?;
                if vals.len() != 3 || vals.iter().any(|&v| v != want) {
                    return Err(err(
                        lineno,
                        format!("unsupported {head} {vals:?}; only the [0,1] domain is supported"),
                    ));
                }
                continue;
            }
            _ => {}
        }
        if head.chars().next().unwrap().is_alphabetic() {
            return Err(err(lineno, format!("unknown directive {head:?}")));
        }

        let size = n.ok_or_else(|| err(lineno, "data before LUT_3D_SIZE"))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(err(lineno, format!("expected 3 components, got {}: {line:?}", parts.len())));
        }
        let mut rgb = [0f32; 3];
        for (slot, part) in rgb.iter_mut().zip(&parts) {
            let v: f64 = part
                .parse()
                .map_err(|_| err(lineno, format!("non-numeric entry: {line:?}")))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("non-finite entry: {line:?}")));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(err(lineno, format!("out-of-domain value in entry: {line:?}")));
            }
            *slot = v as f32;
        }
        if data.len() / 3 >= size * size * size {
            return Err(err(lineno, format!("more than {} entries for LUT_3D_SIZE {size}", size.pow(3))));
        }
        data.extend_from_slice(&rgb);
    }

    let size = n.ok_or_else(|| err(last_line.max(1), "missing LUT_3D_SIZE header"))?;
    let expected = size * size * size;
    let got = data.len() / 3;
    if got != expected {
        return Err(err(
            last_line.max(1),
            format!("expected {expected} entries for LUT_3D_SIZE {size}, got {got} (missing {})", expected - got),
        ));
    }
    Ok(PackedLut { n: size, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_identity() {
        let text = "LUT_3D_SIZE 2\n\
                    0 0 0\n1 0 0\n0 1 0\n1 1 0\n0 0 1\n1 0 1\n0 1 1\n1 1 1\n";
        let lut = parse_cube(text).unwrap();
        assert_eq!(lut.n, 2);
        assert_eq!(lut.data.len(), 24);
    }

    #[test]
    fn rejects_scientific_out_of_range() {
        let text = "LUT_3D_SIZE 2\n2e0 0 0\n";
        let e = parse_cube(text).unwrap_err();
        assert_eq!(e.line, 2);
    }
}
