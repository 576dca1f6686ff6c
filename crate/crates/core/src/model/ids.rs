use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ModelError;

/// Bluetooth device address: exactly 12 lowercase hex digits, no separators.
///
/// Input is case-normalized, so equality is plain string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DeviceId(String);

impl DeviceId {
    pub fn new(raw: &str) -> Result<Self, ModelError> {
        parse_hex(raw, 12)
            .map(DeviceId)
            .ok_or_else(|| ModelError::MalformedDeviceId(raw.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Bluetooth device class as reported in a discovery response: 6 hex digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DeviceClass(String);

impl DeviceClass {
    pub fn new(raw: &str) -> Result<Self, ModelError> {
        parse_hex(raw, 6)
            .map(DeviceClass)
            .ok_or_else(|| ModelError::MalformedDeviceClass(raw.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Bus stop identifier, e.g. `S303`. Non-empty, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StopId(String);

impl StopId {
    pub fn new(raw: &str) -> Result<Self, ModelError> {
        if raw.is_empty() || raw.chars().any(|c| c.is_whitespace()) {
            return Err(ModelError::MalformedStopId(raw.to_owned()));
        }
        Ok(StopId(raw.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn parse_hex(raw: &str, len: usize) -> Option<String> {
    if raw.len() != len || !raw.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    Some(raw.to_ascii_lowercase())
}

/// Keyed one-way pseudonymization of device ids.
///
/// Output is itself a valid [`DeviceId`] (first 12 hex digits of
/// SHA-256 over `key:id`), so hashed files keep the exact same schema and
/// every count-based analysis is unchanged.
#[derive(Debug, Clone)]
pub struct DeviceHasher {
    key: String,
}

impl DeviceHasher {
    pub fn new(key: &str) -> Self {
        DeviceHasher { key: key.to_owned() }
    }

    pub fn hash(&self, id: &DeviceId) -> DeviceId {
        let mut hasher = Sha256::new();
        hasher.update(self.key.as_bytes());
        hasher.update(b":");
        hasher.update(id.as_str().as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(12);
        for byte in digest.iter().take(6) {
            out.push_str(&format!("{byte:02x}"));
        }
        DeviceId(out)
    }
}

macro_rules! string_like {
    ($ty:ty) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl TryFrom<String> for $ty {
            type Error = ModelError;
            fn try_from(raw: String) -> Result<Self, ModelError> {
                <$ty>::new(&raw)
            }
        }

        impl From<$ty> for String {
            fn from(v: $ty) -> String {
                v.0
            }
        }
    };
}

string_like!(DeviceId);
string_like!(DeviceClass);
string_like!(StopId);
