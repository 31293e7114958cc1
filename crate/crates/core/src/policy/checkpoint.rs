//! Flat little-endian checkpoint format for policy parameters.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "RPFP"
//!      4     2  format version (u16, = 1)
//!      6     1  policy kind: 0 softmax, 1 gaussian/learned log-std,
//!                            2 gaussian/fixed log-std, 3 deterministic
//!      7     1  feature kind: 0 identity, 1 one-hot, 2 polynomial, 3 tanh
//!      8     4  feature size (u32): identity/tanh dim | n_states | input dim
//!     12     4  polynomial degree (u32, 0 otherwise)
//!     16     4  outputs (u32): n_actions | action_dim
//!     20     8  fixed log-std (f64, 0 unless kind 2)
//!     28     8  parameter count n (u64)
//!     36    8n  θ as IEEE-754 binary64
//! ```
//! All integers and floats are little-endian.

use super::{FeatureMap, LogStd, PolicyFamily, PolicyKind, PolicyParams};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"RPFP";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 36;

pub fn encode_params<R: Real>(params: &PolicyParams<R>) -> Vec<u8> {
    let fam = params.family();
    let (kind, fixed) = match fam.kind {
        PolicyKind::Softmax { .. } => (0u8, 0.0),
        PolicyKind::Gaussian { log_std: LogStd::Learned, .. } => (1, 0.0),
        PolicyKind::Gaussian { log_std: LogStd::Fixed(v), .. } => (2, v.as_f64()),
        PolicyKind::Deterministic { .. } => (3, 0.0),
    };
    let (fkind, fsize, degree) = match fam.features {
        FeatureMap::Identity { dim } => (0u8, dim, 0),
        FeatureMap::OneHot { n_states } => (1, n_states, 0),
        FeatureMap::Polynomial { input_dim, degree } => (2, input_dim, degree),
        FeatureMap::Tanh { dim } => (3, dim, 0),
    };
    let theta = params.theta();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * theta.len());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind);
    out.push(fkind);
    out.extend_from_slice(&(fsize as u32).to_le_bytes());
    out.extend_from_slice(&(degree as u32).to_le_bytes());
    out.extend_from_slice(&(fam.outputs() as u32).to_le_bytes());
    out.extend_from_slice(&fixed.to_le_bytes());
    out.extend_from_slice(&(theta.len() as u64).to_le_bytes());
    for x in theta {
        out.extend_from_slice(&x.as_f64().to_le_bytes());
    }
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Parse { line: 0, msg: msg.into() }
}

pub fn decode_params<R: Real>(bytes: &[u8]) -> Result<PolicyParams<R>> {
    if bytes.len() < HEADER_LEN {
        return Err(bad("checkpoint shorter than header"));
    }
    if bytes[0..4] != CHECKPOINT_MAGIC {
        return Err(bad("bad checkpoint magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let features = match bytes[7] {
        0 => FeatureMap::Identity { dim: u32_at(8) },
        1 => FeatureMap::OneHot { n_states: u32_at(8) },
        2 => FeatureMap::Polynomial { input_dim: u32_at(8), degree: u32_at(12) },
        3 => FeatureMap::Tanh { dim: u32_at(8) },
        k => return Err(bad(format!("unknown feature kind {k}"))),
    };
    let outputs = u32_at(16);
    let kind = match bytes[6] {
        0 => PolicyKind::Softmax { n_actions: outputs },
        1 => PolicyKind::Gaussian { action_dim: outputs, log_std: LogStd::Learned },
        2 => PolicyKind::Gaussian { action_dim: outputs, log_std: LogStd::Fixed(R::lit(f64_at(20))) },
        3 => PolicyKind::Deterministic { action_dim: outputs },
        k => return Err(bad(format!("unknown policy kind {k}"))),
    };
    let n = u64::from_le_bytes(bytes[28..36].try_into().unwrap()) as usize;
    if bytes.len() != HEADER_LEN + 8 * n {
        return Err(bad(format!("expected {} bytes, found {}", HEADER_LEN + 8 * n, bytes.len())));
    }
    let theta = (0..n).map(|i| R::lit(f64_at(HEADER_LEN + 8 * i))).collect();
    PolicyParams::new(PolicyFamily { kind, features }, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let fam = PolicyFamily::softmax(FeatureMap::OneHot { n_states: 3 }, 2);
        let p = PolicyParams::new(fam, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let bytes = encode_params(&p);
        assert_eq!(bytes.len(), 36 + 48);
        assert_eq!(&bytes[0..4], b"RPFP");
        assert_eq!(bytes[6], 0);
        assert_eq!(bytes[7], 1);
        assert_eq!(&bytes[36..44], &1.0f64.to_le_bytes());
        assert!(decode_params::<f64>(&bytes[..40]).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(theta in proptest::collection::vec(-1e6f64..1e6, 5), ls in -3.0f64..1.0, which in 0usize..4) {
            let fam = match which {
                0 => PolicyFamily::softmax(FeatureMap::Polynomial { input_dim: 2, degree: 2 }, 1),
                1 => PolicyFamily::gaussian(FeatureMap::Identity { dim: 5 }, 1, LogStd::Fixed(ls)),
                2 => PolicyFamily::deterministic(FeatureMap::Identity { dim: 5 }, 1),
                _ => PolicyFamily::deterministic(FeatureMap::Tanh { dim: 5 }, 1),
            };
            let p = PolicyParams::new(fam, theta).unwrap();
            let back: PolicyParams<f64> = decode_params(&encode_params(&p)).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
