//! Structured pass/fail reports shared by every checker.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// How a check's values are judged against the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// A norm of a difference; holds when every value is `<= tol`.
    Residual,
    /// A minimum eigenvalue; holds when every value is `>= -tol`.
    Margin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub witness: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub kind: CheckKind,
    pub holds: bool,
    /// Largest residual or smallest margin seen; `null` when nothing was
    /// evaluated.
    pub worst: Option<f64>,
    pub worst_at: Option<String>,
    pub evaluated: usize,
    pub failures: usize,
    /// First few failures.
    pub violations: Vec<Violation>,
}

const MAX_LISTED: usize = 16;

impl Check {
    pub fn new(label: impl Into<String>, kind: CheckKind) -> Self {
        Check {
            label: label.into(),
            kind,
            holds: true,
            worst: None,
            worst_at: None,
            evaluated: 0,
            failures: 0,
            violations: Vec::new(),
        }
    }

    /// Records one value. The witness closure only runs when needed.
    pub fn record(&mut self, value: f64, tol: f64, witness: impl FnOnce() -> String) {
        self.evaluated += 1;
        let (worse, ok) = match self.kind {
            CheckKind::Residual => (self.worst.is_none_or(|w| value > w), value <= tol),
            CheckKind::Margin => (self.worst.is_none_or(|w| value < w), value >= -tol),
        };
        let worse = worse || value.is_nan();
        if !worse && ok {
            return;
        }
        let w = witness();
        if worse {
            self.worst = Some(value);
            self.worst_at = Some(w.clone());
        }
        if !ok {
            self.holds = false;
            self.failures += 1;
            if self.violations.len() < MAX_LISTED {
                self.violations.push(Violation { witness: w, value });
            }
        }
    }

    /// Records a condition that must hold exactly.
    pub fn record_bool(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.record(if ok { 0.0 } else { 1.0 }, 0.5, witness);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub holds: bool,
    /// False when the check's hypothesis is not met; `holds` is then true.
    pub applicable: bool,
    pub tol: f64,
    /// Set when some operator was evaluated on a truncated Fock space or
    /// with a cap below the largest nonempty shape.
    pub truncated: bool,
    pub checks: Vec<Check>,
    pub flags: BTreeMap<String, bool>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(name: impl Into<String>, tol: f64) -> Self {
        Report {
            name: name.into(),
            holds: true,
            applicable: true,
            tol,
            truncated: false,
            checks: Vec::new(),
            flags: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn not_applicable(name: impl Into<String>, tol: f64, why: impl Into<String>) -> Self {
        let mut r = Self::new(name, tol);
        r.applicable = false;
        r.notes.push(why.into());
        r
    }

    pub fn push(&mut self, check: Check) {
        self.holds &= check.holds;
        self.checks.push(check);
    }

    /// Appends every check of `other` with its labels prefixed.
    pub fn absorb(&mut self, other: Report) {
        self.truncated |= other.truncated;
        for mut c in other.checks {
            c.label = format!("{}: {}", other.name, c.label);
            self.push(c);
        }
        for (k, v) in other.flags {
            self.flags.insert(format!("{}: {k}", other.name), v);
        }
        self.notes.extend(other.notes);
    }

    pub fn check(&self, label: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.label == label)
    }

    /// Largest residual over checks of that kind.
    pub fn worst_residual(&self) -> f64 {
        self.checks.iter().filter(|c| c.kind == CheckKind::Residual).filter_map(|c| c.worst).fold(0.0, f64::max)
    }

    /// Smallest margin over checks of that kind.
    pub fn worst_margin(&self) -> f64 {
        self.checks.iter().filter(|c| c.kind == CheckKind::Margin).filter_map(|c| c.worst).fold(f64::INFINITY, f64::min)
    }

    /// One line per check.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{}: {}{}\n",
            self.name,
            if !self.applicable {
                "not applicable"
            } else if self.holds {
                "holds"
            } else {
                "FAILS"
            },
            if self.truncated { " (truncated)" } else { "" }
        );
        for c in &self.checks {
            let worst = c.worst.map_or("-".to_string(), |w| format!("{w:.3e}"));
            out.push_str(&format!(
                "  [{}] {} ({} evaluated, worst {} at {})\n",
                if c.holds { "ok" } else { "FAIL" },
                c.label,
                c.evaluated,
                worst,
                c.worst_at.as_deref().unwrap_or("-")
            ));
            for v in &c.violations {
                out.push_str(&format!("      {} = {:.3e}\n", v.witness, v.value));
            }
        }
        for (k, v) in &self.flags {
            out.push_str(&format!("  {k}: {v}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_and_margin_semantics() {
        let mut c = Check::new("r", CheckKind::Residual);
        c.record(1e-12, 1e-9, || "a".into());
        c.record(1e-3, 1e-9, || "b".into());
        assert!(!c.holds);
        assert_eq!(c.worst, Some(1e-3));
        assert_eq!(c.worst_at.as_deref(), Some("b"));
        assert_eq!(c.failures, 1);

        let mut m = Check::new("m", CheckKind::Margin);
        m.record(0.75, 1e-9, || "x".into());
        m.record(-1e-12, 1e-9, || "y".into());
        assert!(m.holds);
        assert_eq!(m.worst, Some(-1e-12));
        m.record(f64::NAN, 1e-9, || "nan".into());
        assert!(!m.holds);

        let mut r = Report::new("demo", 1e-9);
        r.push(c);
        r.push(m);
        assert!(!r.holds);
        assert!(r.to_text().contains("FAIL"));
    }
}
