//! SFC header codec: `<sfc_id>;<vnf1>,<vnf2>,...` (ASCII).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeaderError {
    #[error("malformed sfc header: {0}")]
    MalformedHeader(String),
}

/// Identifies the chain a request belongs to and the VNFs it must traverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SfcHeader {
    pub sfc_id: String,
    pub chain: Vec<String>,
}

impl SfcHeader {
    pub fn new(sfc_id: impl Into<String>, chain: Vec<String>) -> Result<Self, HeaderError> {
        let h = Self { sfc_id: sfc_id.into(), chain };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), HeaderError> {
        let malformed = |m: &str| Err(HeaderError::MalformedHeader(m.into()));
        if self.sfc_id.is_empty() {
            return malformed("empty sfc id");
        }
        if self.sfc_id.contains([';', ',']) {
            return malformed("sfc id contains a delimiter");
        }
        if !self.sfc_id.is_ascii() || self.chain.iter().any(|v| !v.is_ascii()) {
            return malformed("non-ascii content");
        }
        if self.chain.is_empty() {
            return malformed("empty chain");
        }
        if self.chain.iter().any(|v| v.is_empty()) {
            return malformed("empty chain element");
        }
        if self.chain.iter().any(|v| v.contains([',', ';'])) {
            return malformed("chain element contains a delimiter");
        }
        Ok(())
    }
}

impl fmt::Display for SfcHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.sfc_id, self.chain.join(","))
    }
}

impl FromStr for SfcHeader {
    type Err = HeaderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let Some((id, chain)) = s.split_once(';') else {
            return Err(HeaderError::MalformedHeader("missing ';'".into()));
        };
        let h = Self { sfc_id: id.to_string(), chain: chain.split(',').map(str::to_string).collect() };
        h.validate()?;
        Ok(h)
    }
}

pub fn encode_sfc_header(h: &SfcHeader) -> Result<String, HeaderError> {
    h.validate()?;
    Ok(h.to_string())
}

pub fn decode_sfc_header(s: &str) -> Result<SfcHeader, HeaderError> {
    s.parse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encodes_grammar_instance() {
        let h = SfcHeader::new("sfc1", vec!["firewall".into(), "nat".into()]).unwrap();
        assert_eq!(encode_sfc_header(&h).unwrap(), "sfc1;firewall,nat");
        assert_eq!(decode_sfc_header("sfc1;firewall,nat").unwrap(), h);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["nodelimiter", ";firewall", "sfc1;", "sfc1;firewall,,nat", "sfc1;a;b", "a,b;fw"] {
            assert!(decode_sfc_header(bad).is_err(), "{bad}");
        }
        assert!(SfcHeader::new("x;y", vec!["a".into()]).is_err());
        assert!(SfcHeader::new("x", vec![]).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(id in "[A-Za-z0-9_.-]{1,12}", chain in prop::collection::vec("[a-z0-9-]{1,10}", 1..6)) {
            let h = SfcHeader::new(id, chain).unwrap();
            prop_assert_eq!(decode_sfc_header(&encode_sfc_header(&h).unwrap()).unwrap(), h);
        }
    }
}
