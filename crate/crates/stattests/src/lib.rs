//! Statistical battery for extracted bit streams, after the NIST SP 800-22
//! tests of the same names. Tests are trait objects in a named registry so
//! a run can select a subset.

pub mod special;

use std::fmt::Write as _;

use cvqrng_core::BitString;
use serde::{Deserialize, Serialize};

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum StatError {
    InsufficientData {
        test: &'static str,
        need: usize,
        have: usize,
    },
    UnknownTest(String),
}

impl std::fmt::Display for StatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StatError::InsufficientData { test, need, have } => {
                write!(f, "{test}: need at least {need} bits, have {have}")
            }
            StatError::UnknownTest(name) => write!(f, "unknown test {name:?}"),
        }
    }
}

impl std::error::Error for StatError {}

/// Raw result of one test. Tests with several statistics (cusum, serial)
/// report every p-value; the category verdict uses the smallest.
#[derive(Clone, Debug, PartialEq)]
pub struct TestOutcome {
    pub name: String,
    pub statistic: f64,
    pub p_values: Vec<f64>,
}

impl TestOutcome {
    pub fn single(name: &str, statistic: f64, p: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            p_values: vec![p],
        }
    }

    pub fn p_value(&self) -> f64 {
        self.p_values.iter().copied().fold(1.0, f64::min)
    }
}

pub trait RandomnessTest: Send + Sync {
    fn name(&self) -> &'static str;
    /// Shortest input the test accepts.
    fn min_bits(&self) -> usize;
    fn run(&self, bits: &BitString) -> Result<TestOutcome, StatError>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryConfig {
    pub alpha: f64,
    pub block_frequency_len: usize,
    pub approximate_entropy_m: usize,
    pub serial_m: usize,
    /// Tests to run by name; empty runs all.
    pub tests: Vec<String>,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            block_frequency_len: 128,
            approximate_entropy_m: 10,
            serial_m: 5,
            tests: Vec::new(),
        }
    }
}

/// Ordered collection of tests.
pub struct TestRegistry {
    tests: Vec<Box<dyn RandomnessTest>>,
}

impl TestRegistry {
    pub fn empty() -> Self {
        Self { tests: Vec::new() }
    }

    /// The nine standard tests, parameterized by `config`.
    pub fn standard(config: &BatteryConfig) -> Self {
        use tests::*;
        let mut r = Self::empty();
        r.register(Box::new(Frequency));
        r.register(Box::new(BlockFrequency {
            block_len: config.block_frequency_len,
        }));
        r.register(Box::new(Runs));
        r.register(Box::new(LongestRun));
        r.register(Box::new(Rank));
        r.register(Box::new(Spectral));
        r.register(Box::new(CumulativeSums));
        r.register(Box::new(ApproximateEntropy {
            m: config.approximate_entropy_m,
        }));
        r.register(Box::new(Serial { m: config.serial_m }));
        r
    }

    /// Adds a test, replacing any with the same name in place.
    pub fn register(&mut self, t: Box<dyn RandomnessTest>) {
        match self.tests.iter().position(|x| x.name() == t.name()) {
            Some(i) => self.tests[i] = t,
            None => self.tests.push(t),
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn RandomnessTest> {
        self.tests.iter().find(|t| t.name() == name).map(|t| t.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.tests.iter().map(|t| t.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn RandomnessTest> {
        self.tests.iter().map(|t| t.as_ref())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    /// Smallest p-value of the category.
    pub p_value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub n_bits: usize,
    pub alpha: f64,
    pub results: Vec<TestResult>,
    /// Tests left out because the input is shorter than they need.
    pub skipped: Vec<String>,
}

impl TestReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn get(&self, name: &str) -> Option<&TestResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("test,statistic,p_value,verdict\n");
        for r in &self.results {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{}",
                r.name,
                r.statistic,
                r.p_value,
                if r.passed { "PASS" } else { "FAIL" }
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} bits, alpha {}\n", self.n_bits, self.alpha);
        for r in &self.results {
            let _ = writeln!(
                s,
                "  {:<20} p = {:.6}  {}",
                r.name,
                r.p_value,
                if r.passed { "pass" } else { "FAIL" }
            );
        }
        for name in &self.skipped {
            let _ = writeln!(s, "  {name:<20} skipped (input too short)");
        }
        let passed = self.results.iter().filter(|r| r.passed).count();
        let _ = writeln!(s, "{passed}/{} passed", self.results.len());
        s
    }
}

/// Runs the configured tests. Inputs shorter than a test's minimum skip that
/// test; an input too short for every selected test is an error.
pub fn run_battery(bits: &BitString, config: &BatteryConfig) -> Result<TestReport, StatError> {
    let registry = TestRegistry::standard(config);
    for name in &config.tests {
        if registry.get(name).is_none() {
            return Err(StatError::UnknownTest(name.clone()));
        }
    }
    let selected: Vec<&dyn RandomnessTest> = registry
        .iter()
        .filter(|t| config.tests.is_empty() || config.tests.iter().any(|n| n == t.name()))
        .collect();
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for t in &selected {
        if bits.len() < t.min_bits() {
            skipped.push(t.name().to_string());
            continue;
        }
        let o = t.run(bits)?;
        let p = o.p_value();
        results.push(TestResult {
            name: o.name.clone(),
            statistic: o.statistic,
            p_value: p,
            passed: p >= config.alpha,
        });
    }
    if results.is_empty() {
        let need = selected.iter().map(|t| t.min_bits()).min().unwrap_or(0);
        return Err(StatError::InsufficientData {
            test: "battery",
            need,
            have: bits.len(),
        });
    }
    Ok(TestReport {
        n_bits: bits.len(),
        alpha: config.alpha,
        results,
        skipped,
    })
}
