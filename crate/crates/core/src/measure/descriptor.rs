//! Text form of a stick-breaking measure:
//! `beta:ALPHA,BETA` | `atoms:x1:p1,x2:p2,...` | `table:PATH`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::SieveError;

#[derive(Debug, Clone, PartialEq)]
pub enum DescriptorKind {
    Beta { alpha: f64, beta: f64 },
    Atoms(Vec<(f64, f64)>),
    Table(PathBuf),
}

/// A parsed measure descriptor that remembers its exact source text, so
/// `text.parse::<MeasureDescriptor>()?.to_string() == text` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDescriptor {
    text: String,
    kind: DescriptorKind,
}

impl MeasureDescriptor {
    pub fn beta(alpha: f64, beta: f64) -> Self {
        Self {
            text: format!("beta:{alpha},{beta}"),
            kind: DescriptorKind::Beta { alpha, beta },
        }
    }

    pub fn atoms(atoms: &[(f64, f64)]) -> Self {
        let body: Vec<String> = atoms.iter().map(|(x, p)| format!("{x}:{p}")).collect();
        Self {
            text: format!("atoms:{}", body.join(",")),
            kind: DescriptorKind::Atoms(atoms.to_vec()),
        }
    }

    pub fn table(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        Self {
            text: format!("table:{}", path.display()),
            kind: DescriptorKind::Table(path),
        }
    }

    pub fn kind(&self) -> &DescriptorKind {
        &self.kind
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for MeasureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn bad(text: &str, reason: impl Into<String>) -> SieveError {
    SieveError::Descriptor {
        text: text.to_string(),
        reason: reason.into(),
    }
}

fn number(text: &str, field: &str) -> Result<f64, SieveError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| bad(text, format!("`{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(bad(text, format!("`{field}` is not finite")));
    }
    Ok(v)
}

impl FromStr for MeasureDescriptor {
    type Err = SieveError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let (tag, body) = text
            .split_once(':')
            .ok_or_else(|| bad(text, "expected `beta:`, `atoms:` or `table:` prefix"))?;
        let kind = match tag {
            "beta" => {
                let (a, b) = body
                    .split_once(',')
                    .ok_or_else(|| bad(text, "expected `beta:ALPHA,BETA`"))?;
                let alpha = number(text, a)?;
                let beta = number(text, b)?;
                if alpha <= 0.0 || beta <= 0.0 {
                    return Err(bad(text, "Beta parameters must be positive"));
                }
                DescriptorKind::Beta { alpha, beta }
            }
            "atoms" => {
                if body.is_empty() {
                    return Err(bad(text, "at least one atom is required"));
                }
                let mut atoms = Vec::new();
                for item in body.split(',') {
                    let (x, p) = item
                        .split_once(':')
                        .ok_or_else(|| bad(text, format!("atom `{item}` is not `x:p`")))?;
                    let x = number(text, x)?;
                    let p = number(text, p)?;
                    if !(x > 0.0 && x < 1.0) {
                        return Err(bad(text, format!("atom {x} lies outside (0,1)")));
                    }
                    if p <= 0.0 {
                        return Err(bad(text, format!("weight {p} is not positive")));
                    }
                    atoms.push((x, p));
                }
                DescriptorKind::Atoms(atoms)
            }
            "table" => {
                if body.is_empty() {
                    return Err(bad(text, "missing table path"));
                }
                DescriptorKind::Table(PathBuf::from(body))
            }
            other => return Err(bad(text, format!("unknown measure family `{other}`"))),
        };
        Ok(Self {
            text: text.to_string(),
            kind,
        })
    }
}
