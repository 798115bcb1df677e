use super::{malformed, AdapterError};
use crate::leakage::DetectorVerdict;

/// KLEESpectre is not supported: its output has no stable machine-readable
/// form to pin against. Always returns a malformed-report error with
/// guidance.
pub fn parse_kleespectre_output(_text: &str) -> Result<DetectorVerdict, AdapterError> {
    Err(malformed(
        1,
        1,
        "KLEESpectre output is not supported; run Spectector or Pitchfork instead, \
         or convert the findings to the Pitchfork result format",
    ))
}
