use std::fmt;

/// A named scalar reported by a check. A witness with a `limit` is a
/// violation measure: the check passes only if `value <= limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub name: String,
    pub value: f64,
    pub limit: Option<f64>,
}

impl Witness {
    pub fn is_violation(&self) -> bool {
        match self.limit {
            Some(limit) => !(self.value <= limit),
            None => false,
        }
    }
}

/// Outcome of one numerical check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckCertificate {
    pub name: String,
    pub passed: bool,
    pub witnesses: Vec<Witness>,
    pub tolerance: f64,
    pub notes: Vec<String>,
}

impl CheckCertificate {
    pub fn builder(name: impl Into<String>, tolerance: f64) -> CertificateBuilder {
        CertificateBuilder {
            cert: CheckCertificate {
                name: name.into(),
                passed: true,
                witnesses: Vec::new(),
                tolerance,
                notes: Vec::new(),
            },
        }
    }

    pub fn witness(&self, name: &str) -> Option<f64> {
        self.witnesses
            .iter()
            .find(|w| w.name == name)
            .map(|w| w.value)
    }

    pub fn failing_witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.witnesses.iter().filter(|w| w.is_violation())
    }
}

pub struct CertificateBuilder {
    cert: CheckCertificate,
}

impl CertificateBuilder {
    /// Violation measure checked against the certificate tolerance.
    pub fn bounded(self, name: impl Into<String>, value: f64) -> Self {
        let limit = self.cert.tolerance;
        self.limited(name, value, limit)
    }

    pub fn limited(mut self, name: impl Into<String>, value: f64, limit: f64) -> Self {
        self.cert.witnesses.push(Witness {
            name: name.into(),
            value,
            limit: Some(limit),
        });
        self
    }

    /// Informational value with no pass/fail role.
    pub fn info(mut self, name: impl Into<String>, value: f64) -> Self {
        self.cert.witnesses.push(Witness {
            name: name.into(),
            value,
            limit: None,
        });
        self
    }

    /// A boolean condition recorded as a 0/1 violation witness.
    pub fn require(self, name: impl Into<String>, ok: bool) -> Self {
        self.limited(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.cert.notes.push(note.into());
        self
    }

    pub fn finish(mut self) -> CheckCertificate {
        self.cert.passed = !self.cert.witnesses.iter().any(Witness::is_violation);
        self.cert
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl fmt::Display for CheckCertificate {
    /// One line: name, verdict, tolerance, witnesses, notes.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} passed={} tolerance={}",
            self.name,
            self.passed,
            num(self.tolerance)
        )?;
        for w in &self.witnesses {
            match w.limit {
                Some(l) => write!(f, " {}={}<={}", w.name, num(w.value), num(l))?,
                None => write!(f, " {}={}", w.name, num(w.value))?,
            }
        }
        if !self.notes.is_empty() {
            write!(f, " notes=\"{}\"", self.notes.join("; ").replace('"', "'"))?;
        }
        Ok(())
    }
}
