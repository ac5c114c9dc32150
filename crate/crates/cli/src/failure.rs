use std::fmt;

use serde::Serialize;

/// Failure classes, each with its own exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Io,
    Parse,
    Validation,
    Infeasible,
    ResourceCap,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Io => 1,
            Kind::Parse => 2,
            Kind::Validation => 3,
            Kind::Infeasible => 4,
            Kind::ResourceCap => 5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn io(context: impl fmt::Display, err: std::io::Error) -> Self {
        Self::new(Kind::Io, format!("{context}: {err}"))
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(Kind::Parse, message)
    }

    /// One JSON object for the diagnostic stream.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

impl From<qcoord::Error> for Failure {
    fn from(e: qcoord::Error) -> Self {
        let kind = match &e {
            qcoord::Error::Config(_) => Kind::Parse,
            qcoord::Error::Infeasible { .. } => Kind::Infeasible,
            qcoord::Error::ResourceCap(_) => Kind::ResourceCap,
            _ => Kind::Validation,
        };
        Self::new(kind, e.to_string())
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_distinct_codes() {
        let codes: Vec<i32> = [
            qcoord::Error::Config("x".into()),
            qcoord::Error::InvalidInput("x".into()),
            qcoord::Error::Infeasible {
                max_residual: 1.0,
                detail: "x".into(),
            },
            qcoord::Error::ResourceCap("x".into()),
        ]
        .into_iter()
        .map(|e| Failure::from(e).kind.exit_code())
        .collect();
        assert_eq!(codes, vec![2, 3, 4, 5]);
        assert_eq!(Failure::io("f", std::io::Error::other("x")).kind.exit_code(), 1);
    }

    #[test]
    fn diagnostics_are_json() {
        let v: serde_json::Value = serde_json::from_str(&Failure::parse("bad \"x\"").to_json()).unwrap();
        assert_eq!(v["error"], "parse");
        assert_eq!(v["message"], "bad \"x\"");
    }
}
