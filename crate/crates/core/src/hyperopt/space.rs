use crate::error::{Result, SurvError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dimension {
    pub name: String,
    pub kind: ParamKind,
    pub lower: f64,
    pub upper: f64,
    pub log_scale: bool,
}

impl Dimension {
    pub fn continuous(name: &str, lower: f64, upper: f64, log_scale: bool) -> Self {
        Self {
            name: name.to_string(),
            kind: ParamKind::Continuous,
            lower,
            upper,
            log_scale,
        }
    }

    pub fn integer(name: &str, lower: i64, upper: i64, log_scale: bool) -> Self {
        Self {
            name: name.to_string(),
            kind: ParamKind::Integer,
            lower: lower as f64,
            upper: upper as f64,
            log_scale,
        }
    }

    /// Interval in the transformed coordinate that maps onto `[0, 1]`.
    /// Integer dimensions are widened by half a unit on each side so every
    /// value owns an equal share of the cube.
    fn span(&self) -> (f64, f64) {
        let (lo, hi) = match self.kind {
            ParamKind::Continuous => (self.lower, self.upper),
            ParamKind::Integer => (self.lower - 0.5, self.upper + 0.5),
        };
        if self.log_scale {
            (lo.ln(), hi.ln())
        } else {
            (lo, hi)
        }
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        let (a, b) = self.span();
        let t = a + u.clamp(0.0, 1.0) * (b - a);
        let v = if self.log_scale { t.exp() } else { t };
        let v = match self.kind {
            ParamKind::Continuous => v,
            ParamKind::Integer => v.round(),
        };
        v.clamp(self.lower, self.upper)
    }

    pub fn to_unit(&self, v: f64) -> f64 {
        let (a, b) = self.span();
        if b == a {
            return 0.5;
        }
        let t = if self.log_scale { v.ln() } else { v };
        ((t - a) / (b - a)).clamp(0.0, 1.0)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper && (self.kind == ParamKind::Continuous || v.fract() == 0.0)
    }
}

/// Ordered hyperparameter box with optional log scaling per dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSpace {
    dims: Vec<Dimension>,
}

impl ParamSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        for d in &dims {
            let bad = |why: &str| Err(SurvError::InvalidInput(format!("dimension `{}`: {why}", d.name)));
            if !(d.lower.is_finite() && d.upper.is_finite()) {
                return bad("bounds must be finite");
            }
            // equal bounds pin the dimension to a single value
            if d.lower > d.upper {
                return bad("lower bound exceeds upper bound");
            }
            if d.kind == ParamKind::Integer && (d.lower.fract() != 0.0 || d.upper.fract() != 0.0) {
                return bad("integer bounds must be integers");
            }
            let log_ok = match d.kind {
                ParamKind::Continuous => d.lower > 0.0,
                ParamKind::Integer => d.lower >= 1.0,
            };
            if d.log_scale && !log_ok {
                return bad("log-scaled bounds must be positive");
            }
        }
        let mut names: Vec<&str> = dims.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(SurvError::InvalidInput("duplicate dimension names".into()));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.dims.iter().map(|d| d.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        self.dims.iter().zip(unit).map(|(d, &u)| d.from_unit(u)).collect()
    }

    pub fn to_unit(&self, point: &[f64]) -> Vec<f64> {
        self.dims.iter().zip(point).map(|(d, &v)| d.to_unit(v)).collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dims.len() && self.dims.iter().zip(point).all(|(d, &v)| d.contains(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ParamSpace::new(vec![Dimension::continuous("a", 1.0, 0.0, false)]).is_err());
        assert!(ParamSpace::new(vec![Dimension::continuous("a", 0.0, 1.0, true)]).is_err());
        assert!(ParamSpace::new(vec![Dimension {
            name: "k".into(),
            kind: ParamKind::Integer,
            lower: 0.5,
            upper: 3.0,
            log_scale: false
        }])
        .is_err());
        assert!(ParamSpace::new(vec![
            Dimension::continuous("a", 0.0, 1.0, false),
            Dimension::continuous("a", 0.0, 2.0, false)
        ])
        .is_err());
        assert!(ParamSpace::new(vec![Dimension::integer("units", 1, 512, true)]).is_ok());
    }

    #[test]
    fn unit_round_trip() {
        let space = ParamSpace::new(vec![
            Dimension::continuous("lr", 1e-5, 1e-1, true),
            Dimension::integer("layers", 1, 3, false),
            Dimension::integer("units", 32, 512, true),
            Dimension::continuous("c", 0.0, 0.5, false),
        ])
        .unwrap();
        let point = vec![1e-3, 2.0, 250.0, 0.2];
        let back = space.from_unit(&space.to_unit(&point));
        assert!((back[0] - 1e-3).abs() < 1e-15);
        assert_eq!(back[1], 2.0);
        assert_eq!(back[2], 250.0);
        assert!((back[3] - 0.2).abs() < 1e-15);
        assert_eq!(space.from_unit(&[0.0, 0.0, 0.0, 0.0]), vec![1e-5, 1.0, 32.0, 0.0]);
        let top = space.from_unit(&[1.0, 1.0, 1.0, 1.0]);
        assert!(space.contains(&top));
        assert_eq!(top[1..3], [3.0, 512.0]);
    }

    #[test]
    fn integers_share_the_cube_evenly() {
        let d = Dimension::integer("k", 1, 3, false);
        let mut counts = [0; 3];
        for i in 0..3000 {
            let v = d.from_unit((i as f64 + 0.5) / 3000.0);
            counts[v as usize - 1] += 1;
        }
        assert_eq!(counts, [1000, 1000, 1000]);
    }
}
