//! Scenarios shipped with the library.

use crate::error::{Error, Result};

use super::config::{parse_scenario, ScenarioConfig};

pub const BUNDLED: [(&str, &str); 5] = [
    ("identity", include_str!("../../scenarios/identity.scn")),
    ("fourier", include_str!("../../scenarios/fourier.scn")),
    ("diffeo", include_str!("../../scenarios/diffeo.scn")),
    ("decomposable", include_str!("../../scenarios/decomposable.scn")),
    ("atomic", include_str!("../../scenarios/atomic.scn")),
];

pub fn list_scenarios() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

pub fn bundled(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::InvalidArgument(format!("no bundled scenario `{name}`")))?;
    parse_scenario(text)
}
