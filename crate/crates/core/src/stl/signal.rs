use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StlError;

/// A finite, timestamped, real-valued signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    name: String,
    timestamps: Vec<f64>,
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(name: impl Into<String>, timestamps: Vec<f64>, values: Vec<f64>) -> Result<Self, StlError> {
        let name = name.into();
        if name.is_empty() {
            return Err(StlError::InvalidSignal("empty signal name".into()));
        }
        if timestamps.is_empty() || timestamps.len() != values.len() {
            return Err(StlError::InvalidSignal(format!(
                "signal {name}: {} timestamps, {} values",
                timestamps.len(),
                values.len()
            )));
        }
        check_timestamps(&timestamps)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StlError::InvalidSignal(format!("signal {name} has a non-finite value")));
        }
        Ok(Self {
            name,
            timestamps,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same values on a different time axis of equal length.
    pub fn with_timestamps(self, timestamps: Vec<f64>) -> Result<Self, StlError> {
        SampledSignal::new(self.name, timestamps, self.values)
    }
}

fn check_timestamps(timestamps: &[f64]) -> Result<(), StlError> {
    if timestamps.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(StlError::InvalidSignal(
            "timestamps must be finite and non-negative".into(),
        ));
    }
    if timestamps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(StlError::InvalidSignal("timestamps must be strictly increasing".into()));
    }
    Ok(())
}

/// Named signals over one shared time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TraceFile", into = "TraceFile")]
pub struct Trace {
    timestamps: Vec<f64>,
    signals: BTreeMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TraceFile {
    timestamps: Vec<f64>,
    signals: BTreeMap<String, Vec<f64>>,
}

impl TryFrom<TraceFile> for Trace {
    type Error = StlError;

    fn try_from(file: TraceFile) -> Result<Self, StlError> {
        Trace::from_columns(file.timestamps, file.signals)
    }
}

impl From<Trace> for TraceFile {
    fn from(t: Trace) -> Self {
        TraceFile {
            timestamps: t.timestamps,
            signals: t.signals,
        }
    }
}

impl Trace {
    pub fn new(signals: impl IntoIterator<Item = SampledSignal>) -> Result<Self, StlError> {
        let mut timestamps: Option<Vec<f64>> = None;
        let mut columns = BTreeMap::new();
        for s in signals {
            match &timestamps {
                None => timestamps = Some(s.timestamps.clone()),
                Some(ts) if ts != &s.timestamps => {
                    return Err(StlError::InvalidSignal(format!(
                        "signal {} does not share the trace time axis",
                        s.name
                    )))
                }
                Some(_) => {}
            }
            if columns.insert(s.name.clone(), s.values).is_some() {
                return Err(StlError::InvalidSignal(format!("duplicate signal {}", s.name)));
            }
        }
        let timestamps = timestamps.ok_or_else(|| StlError::InvalidSignal("trace has no signals".into()))?;
        Ok(Self {
            timestamps,
            signals: columns,
        })
    }

    pub fn from_columns(timestamps: Vec<f64>, signals: BTreeMap<String, Vec<f64>>) -> Result<Self, StlError> {
        let signals = signals
            .into_iter()
            .map(|(name, values)| SampledSignal::new(name, timestamps.clone(), values))
            .collect::<Result<Vec<_>, _>>()?;
        Trace::new(signals)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.signals.get(name).map(Vec::as_slice)
    }

    pub fn signal(&self, name: &str) -> Option<SampledSignal> {
        self.signals.get(name).map(|v| SampledSignal {
            name: name.to_owned(),
            timestamps: self.timestamps.clone(),
            values: v.clone(),
        })
    }

    pub fn signal_names(&self) -> impl Iterator<Item = &str> {
        self.signals.keys().map(String::as_str)
    }
}
