use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Value,
    Detect,
    Removal,
    Bench,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Value => "value",
            Self::Detect => "detect",
            Self::Removal => "removal",
            Self::Bench => "bench",
        }
    }

    fn uses_data(self) -> bool {
        !matches!(self, Self::Bench)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dataoob,
    KnnShapley,
    DataShapley,
    BetaShapley,
    Ame,
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dataoob => "dataoob",
            Self::KnnShapley => "knn-shapley",
            Self::DataShapley => "data-shapley",
            Self::BetaShapley => "beta-shapley",
            Self::Ame => "ame",
            Self::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown method '{s}'")))
    }
}

/// Run settings, as given on the command line, in a config file, or
/// resolved. Every field is optional so the three layers can be merged;
/// after [`Settings::resolve`] exactly the fields that apply to the command
/// and method are set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub openml: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corruption_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gr_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_samples_per_chain: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsets_per_p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timeout: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Not part of the resolved configuration: thread count never changes
    /// results.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Not part of the resolved configuration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

fn need<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing required setting '{what}'")))
}

impl Settings {
    /// Reads a config file: either a settings object or a manifest written
    /// by a previous run (its `config` member is used).
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        let inner = match value.get("config") {
            Some(c) if value.get("manifest_sha256").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    /// Fields set in `top` override fields set here.
    pub fn overlay(mut self, top: &Settings) -> Self {
        overlay!(
            self, top, command, csv, label_column, openml, synthetic, dim, n, val_fraction, test_size,
            corruption_rate, method, b, k, chains, gr_threshold, max_samples_per_chain, check_every, alpha, beta,
            probabilities, subsets_per_p, folds, stride, methods, n_grid, repetitions, timeout, seed, workers, out
        );
        self
    }

    /// Names of the fields that are set, in declaration order.
    fn given(&self) -> Vec<&'static str> {
        let v = serde_json::to_value(self).expect("settings serialize");
        let obj = v.as_object().expect("settings are an object");
        FIELD_ORDER.iter().copied().filter(|f| obj.contains_key(*f)).collect()
    }

    /// Checks that every given field applies to the command and method,
    /// fills defaults for the ones that apply, and drops `workers`/`out`.
    pub fn resolve(&self) -> Result<Settings> {
        let command = need(self.command, "command")?;
        let method = self.method.unwrap_or(Method::Dataoob);
        let synthetic = self.synthetic.unwrap_or(false);
        let allowed = allowed_fields(command, method, synthetic, self.csv.is_some());
        for f in self.given() {
            if matches!(f, "workers" | "out" | "command") {
                continue;
            }
            if !allowed.contains(&f) {
                return Err(Error::Config(not_applicable(f, command, method)));
            }
        }

        let mut r = Settings {
            command: Some(command),
            seed: Some(self.seed.unwrap_or(0)),
            ..Settings::default()
        };
        if command.uses_data() {
            let sources = usize::from(self.csv.is_some()) + usize::from(self.openml.is_some()) + usize::from(synthetic);
            if sources != 1 {
                return Err(Error::Config(
                    "choose exactly one dataset source: --csv PATH, --openml ID or --synthetic".into(),
                ));
            }
            r.csv = self.csv.clone();
            if self.csv.is_some() {
                r.label_column = Some(self.label_column.clone().unwrap_or_else(|| "label".into()));
            }
            r.openml = self.openml;
            if synthetic {
                r.synthetic = Some(true);
                r.dim = Some(self.dim.unwrap_or(10));
            }
            r.n = Some(self.n.unwrap_or(1000));
            r.val_fraction = Some(self.val_fraction.unwrap_or(0.1));
            r.test_size = Some(self.test_size.unwrap_or(3000));
            let default_rate = if command == CommandKind::Value { 0.0 } else { 0.1 };
            r.corruption_rate = Some(self.corruption_rate.unwrap_or(default_rate));
            r.method = Some(method);
            match method {
                Method::Dataoob => r.b = Some(self.b.unwrap_or(800)),
                Method::KnnShapley => r.k = self.k,
                Method::DataShapley | Method::BetaShapley => {
                    r.chains = Some(self.chains.unwrap_or(10));
                    r.gr_threshold = Some(self.gr_threshold.unwrap_or(1.05));
                    r.max_samples_per_chain = Some(self.max_samples_per_chain.unwrap_or(100));
                    r.check_every = Some(self.check_every.unwrap_or(10));
                    if method == Method::BetaShapley {
                        r.alpha = Some(self.alpha.unwrap_or(16.0));
                        r.beta = Some(self.beta.unwrap_or(1.0));
                    }
                }
                Method::Ame => {
                    r.probabilities = Some(self.probabilities.clone().unwrap_or_else(|| vec![0.2, 0.4, 0.6, 0.8]));
                    r.subsets_per_p = Some(self.subsets_per_p.unwrap_or(200));
                    r.folds = Some(self.folds.unwrap_or(5));
                }
                Method::Random => {}
            }
            if command == CommandKind::Removal {
                r.stride = Some(self.stride.unwrap_or(0.05));
            }
        } else {
            r.dim = Some(self.dim.unwrap_or(10));
            r.b = Some(self.b.unwrap_or(800));
            r.methods = Some(self.methods.clone().unwrap_or_else(|| vec![Method::Dataoob, Method::KnnShapley]));
            r.n_grid = Some(self.n_grid.clone().unwrap_or_else(|| vec![10_000, 25_000, 50_000, 100_000]));
            r.repetitions = Some(self.repetitions.unwrap_or(5));
            r.timeout = self.timeout;
        }
        r.check_ranges()?;
        Ok(r)
    }

    fn check_ranges(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if let Some(n) = self.n {
            if n < 2 {
                return bad(format!("n must be at least 2, got {n}"));
            }
        }
        if let Some(v) = self.val_fraction {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("val_fraction must be in [0, 1), got {v}"));
            }
        }
        if let Some(r) = self.corruption_rate {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("corruption_rate must be in [0, 1), got {r}"));
            }
        }
        if self.b == Some(0) {
            return bad("b must be at least 1".into());
        }
        if self.k == Some(0) {
            return bad("k must be at least 1".into());
        }
        if self.dim == Some(0) {
            return bad("dim must be at least 1".into());
        }
        if let Some(c) = self.chains {
            if c < 2 {
                return bad(format!("chains must be at least 2, got {c}"));
            }
        }
        if let (Some(m), Some(c)) = (self.max_samples_per_chain, self.check_every) {
            if c < 2 || m < c {
                return bad("need check_every >= 2 and max_samples_per_chain >= check_every".into());
            }
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gr_threshold", self.gr_threshold)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return bad(format!("{name} must be positive, got {x}"));
                }
            }
        }
        if let Some(ps) = &self.probabilities {
            if ps.is_empty() || ps.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
                return bad("probabilities must be nonempty and inside (0, 1)".into());
            }
        }
        if self.subsets_per_p == Some(0) {
            return bad("subsets_per_p must be at least 1".into());
        }
        if let Some(f) = self.folds {
            if f < 2 {
                return bad(format!("folds must be at least 2, got {f}"));
            }
        }
        if let Some(s) = self.stride {
            if !(s > 0.0 && s <= 0.5) {
                return bad(format!("stride must be in (0, 0.5], got {s}"));
            }
        }
        if let Some(ms) = &self.methods {
            if ms.is_empty() || ms.iter().any(|m| !matches!(m, Method::Dataoob | Method::KnnShapley)) {
                return bad("bench methods must be a nonempty subset of dataoob, knn-shapley".into());
            }
        }
        if let Some(g) = &self.n_grid {
            if g.is_empty() || g.iter().any(|&n| n < 2) {
                return bad("n_grid must be nonempty with every n >= 2".into());
            }
        }
        if self.repetitions == Some(0) {
            return bad("repetitions must be at least 1".into());
        }
        Ok(())
    }

    pub fn is_synthetic(&self) -> bool {
        self.synthetic == Some(true)
    }
}

const FIELD_ORDER: &[&str] = &[
    "command", "csv", "label_column", "openml", "synthetic", "dim", "n", "val_fraction", "test_size",
    "corruption_rate", "method", "b", "k", "chains", "gr_threshold", "max_samples_per_chain", "check_every",
    "alpha", "beta", "probabilities", "subsets_per_p", "folds", "stride", "methods", "n_grid", "repetitions",
    "timeout", "seed", "workers", "out",
];

fn allowed_fields(command: CommandKind, method: Method, synthetic: bool, csv: bool) -> Vec<&'static str> {
    let mut f = vec!["seed"];
    if command.uses_data() {
        f.extend(["csv", "openml", "synthetic", "n", "val_fraction", "test_size", "corruption_rate", "method"]);
        if synthetic {
            f.push("dim");
        }
        if csv {
            f.push("label_column");
        }
        match method {
            Method::Dataoob => f.push("b"),
            Method::KnnShapley => f.push("k"),
            Method::DataShapley => f.extend(["chains", "gr_threshold", "max_samples_per_chain", "check_every"]),
            Method::BetaShapley => {
                f.extend(["chains", "gr_threshold", "max_samples_per_chain", "check_every", "alpha", "beta"])
            }
            Method::Ame => f.extend(["probabilities", "subsets_per_p", "folds"]),
            Method::Random => {}
        }
        if command == CommandKind::Removal {
            f.push("stride");
        }
    } else {
        f.extend(["dim", "b", "methods", "n_grid", "repetitions", "timeout"]);
    }
    f
}

fn not_applicable(field: &str, command: CommandKind, method: Method) -> String {
    let flag = format!("--{}", field.replace('_', "-"));
    match field {
        "b" | "k" | "chains" | "gr_threshold" | "max_samples_per_chain" | "check_every" | "alpha" | "beta"
        | "probabilities" | "subsets_per_p" | "folds"
            if command.uses_data() =>
        {
            format!("{flag} does not apply to --method {}", method.name())
        }
        "dim" if command.uses_data() => format!("{flag} only applies with --synthetic"),
        "label_column" => format!("{flag} only applies with --csv"),
        _ => format!("{flag} does not apply to the '{}' command", command.name()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value_synthetic() -> Settings {
        Settings {
            command: Some(CommandKind::Value),
            synthetic: Some(true),
            ..Settings::default()
        }
    }

    #[test]
    fn defaults_follow_the_method() {
        let r = value_synthetic().resolve().unwrap();
        assert_eq!(r.b, Some(800));
        assert_eq!(r.n, Some(1000));
        assert_eq!(r.dim, Some(10));
        assert_eq!(r.k, None);
        assert_eq!(r.corruption_rate, Some(0.0));
    }

    #[test]
    fn method_specific_flags_are_checked() {
        let s = Settings {
            method: Some(Method::Ame),
            k: Some(5),
            ..value_synthetic()
        };
        let err = s.resolve().unwrap_err().to_string();
        assert!(err.contains("--k does not apply to --method ame"), "{err}");
    }

    #[test]
    fn exactly_one_source() {
        let s = Settings {
            openml: Some(3),
            ..value_synthetic()
        };
        assert!(s.resolve().is_err());
        let s = Settings {
            command: Some(CommandKind::Value),
            ..Settings::default()
        };
        assert!(s.resolve().is_err());
    }

    #[test]
    fn cli_overrides_file() {
        let file = Settings {
            b: Some(100),
            seed: Some(4),
            ..value_synthetic()
        };
        let cli = Settings {
            b: Some(200),
            ..Settings::default()
        };
        let r = file.overlay(&cli).resolve().unwrap();
        assert_eq!((r.b, r.seed), (Some(200), Some(4)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Settings::from_json(r#"{"bogus": 1}"#).is_err());
        let s = Settings::from_json(r#"{"command": "value", "synthetic": true, "b": 5}"#).unwrap();
        assert_eq!(s.b, Some(5));
    }

    #[test]
    fn manifest_config_is_accepted() {
        let r = value_synthetic().resolve().unwrap();
        let manifest = serde_json::json!({ "manifest_sha256": "x", "config": r });
        let back = Settings::from_json(&manifest.to_string()).unwrap();
        assert_eq!(back.resolve().unwrap(), r);
    }

    #[test]
    fn resolve_is_idempotent() {
        let r = Settings {
            method: Some(Method::BetaShapley),
            ..value_synthetic()
        }
        .resolve()
        .unwrap();
        assert_eq!(r.resolve().unwrap(), r);
    }
}
