use crate::{Error, Result};

/// Whether the certified bounds refer to transitions or to instants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// `certified_bounds[i]` bounds `values[i + 1] - values[i]`, so there is
    /// one bound fewer than there are values.
    Discrete,
    /// `certified_bounds[i]` bounds the time derivative at `times[i]`.
    Continuous,
}

/// Lyapunov values with the bounds a convergence theorem certifies for them.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovTrace {
    pub kind: TraceKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub certified_bounds: Vec<f64>,
}

impl LyapunovTrace {
    pub fn discrete() -> Self {
        LyapunovTrace {
            kind: TraceKind::Discrete,
            times: Vec::new(),
            values: Vec::new(),
            certified_bounds: Vec::new(),
        }
    }

    pub fn continuous() -> Self {
        LyapunovTrace {
            kind: TraceKind::Continuous,
            ..LyapunovTrace::discrete()
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::MalformedTrace(format!(
                "{} times for {} values",
                self.times.len(),
                self.values.len()
            )));
        }
        let expected = match self.kind {
            TraceKind::Discrete => self.values.len().saturating_sub(1),
            TraceKind::Continuous => self.values.len(),
        };
        if self.certified_bounds.len() != expected {
            return Err(Error::MalformedTrace(format!(
                "{} bounds for {} values, expected {expected}",
                self.certified_bounds.len(),
                self.values.len()
            )));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::MalformedTrace(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Per-iteration diagnostics of a discrete run, one row per transition
/// `k -> k + 1`, together with the Lyapunov trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub trace: LyapunovTrace,
    /// Primal iterates `x_k`, filled only when requested.
    pub xs: Vec<crate::Vector>,
    /// Secondary iterates `y_k` for schemes that have them, filled only when requested.
    pub ys: Vec<crate::Vector>,
}

impl RunRecord {
    pub fn new(columns: Vec<&'static str>, trace: LyapunovTrace) -> Self {
        RunRecord {
            columns,
            rows: Vec::new(),
            trace,
            xs: Vec::new(),
            ys: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}
