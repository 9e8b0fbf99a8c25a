use super::CifError;

/// Affine symmetry operation on fractional coordinates: `x' = R·x + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryOp {
    pub rotation: [[i8; 3]; 3],
    /// Reduced into [0, 1).
    pub translation: [f64; 3],
}

impl SymmetryOp {
    pub fn identity() -> Self {
        SymmetryOp { rotation: [[1, 0, 0], [0, 1, 0], [0, 0, 1]], translation: [0.0; 3] }
    }

    pub fn apply(&self, f: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| {
            let r = self.rotation[i];
            r[0] as f64 * f[0] + r[1] as f64 * f[1] + r[2] as f64 * f[2] + self.translation[i]
        })
    }

    pub fn determinant(&self) -> i32 {
        let m = self.rotation.map(|r| r.map(i32::from));
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Snap decimals such as 0.3333 or 0.16667 onto the nearest multiple of 1/24.
fn snap(v: f64) -> f64 {
    let k = (v * 24.0).round();
    if (v * 24.0 - k).abs() < 24.0 * 1e-3 { k / 24.0 } else { v }
}

fn reduce(v: f64) -> f64 {
    let r = v - v.floor();
    if (1.0 - r).abs() < 1e-12 { 0.0 } else { r }
}

fn parse_constant(s: &str, expr: &str) -> Result<f64, CifError> {
    let bad = || CifError::Symop { expr: expr.to_string(), reason: format!("bad constant '{s}'") };
    if let Some((n, d)) = s.split_once('/') {
        let n: f64 = n.parse().map_err(|_| bad())?;
        let d: f64 = d.parse().map_err(|_| bad())?;
        if d == 0.0 {
            return Err(bad());
        }
        Ok(n / d)
    } else {
        Ok(snap(s.parse::<f64>().map_err(|_| bad())?))
    }
}

fn parse_component(comp: &str, expr: &str) -> Result<([i8; 3], f64), CifError> {
    let err = |reason: String| CifError::Symop { expr: expr.to_string(), reason };
    let s: String = comp.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
    if s.is_empty() {
        return Err(err("empty component".into()));
    }
    // split into signed terms
    let mut terms = Vec::new();
    let mut cur = String::new();
    for (i, ch) in s.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);

    let mut row = [0i8; 3];
    let mut shift = 0.0;
    for term in terms {
        let (sign, body) = match term.strip_prefix('-') {
            Some(b) => (-1.0, b),
            None => (1.0, term.strip_prefix('+').unwrap_or(&term)),
        };
        if body.is_empty() {
            return Err(err(format!("dangling sign in '{comp}'")));
        }
        let axis = match body.chars().last() {
            Some('x') => Some(0),
            Some('y') => Some(1),
            Some('z') => Some(2),
            _ => None,
        };
        match axis {
            Some(k) => {
                let coef_txt = body[..body.len() - 1].trim_end_matches('*');
                let coef = if coef_txt.is_empty() { 1.0 } else { parse_constant(coef_txt, expr)? };
                let total = row[k] as f64 + sign * coef;
                if total.fract() != 0.0 || total.abs() > 1.0 {
                    return Err(err(format!("coefficient of {} must be -1, 0 or 1", ['x', 'y', 'z'][k])));
                }
                row[k] = total as i8;
            }
            None => {
                if body.contains(['x', 'y', 'z']) {
                    return Err(err(format!("non-affine term '{body}'")));
                }
                shift += sign * parse_constant(body, expr)?;
            }
        }
    }
    Ok((row, shift))
}

/// Parse a symmetry operation written as `x,-y+1/2,z`.
pub fn parse_symop(expr: &str) -> Result<SymmetryOp, CifError> {
    let parts: Vec<&str> = expr.split(',').collect();
    if parts.len() != 3 {
        return Err(CifError::Symop { expr: expr.into(), reason: "expected three components".into() });
    }
    let mut op = SymmetryOp { rotation: [[0; 3]; 3], translation: [0.0; 3] };
    for (i, p) in parts.iter().enumerate() {
        let (row, t) = parse_component(p, expr)?;
        op.rotation[i] = row;
        op.translation[i] = reduce(t);
    }
    if op.determinant().abs() != 1 {
        return Err(CifError::Symop { expr: expr.into(), reason: "rotation is singular".into() });
    }
    Ok(op)
}
