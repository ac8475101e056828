use std::fmt;

use k256::ecdsa::signature::{Signer, Verifier};
use k256::ecdsa::{Signature as EcdsaSignature, SigningKey, VerifyingKey};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::CryptoError;

pub const ADDRESS_LEN: usize = 33;

/// Signature backend shared by every participant of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignatureScheme {
    /// ECDSA over secp256k1 with RFC 6979 nonces.
    #[default]
    Ecdsa,
    /// Test backend: the signature is `SHA-256(address ‖ message)`.
    ///
    /// It binds a message to an address but anyone can produce it. Use it
    /// only where forgery is outside the model (large Monte Carlo runs).
    Null,
}

/// A public key in compressed SEC1 form. The address is the account id.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(pub [u8; ADDRESS_LEN]);

impl Address {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Address, CryptoError> {
        let bytes = hex::decode(s.trim()).map_err(|_| CryptoError::MalformedKey)?;
        let arr: [u8; ADDRESS_LEN] = bytes.try_into().map_err(|_| CryptoError::MalformedKey)?;
        Ok(Address(arr))
    }

    pub fn short(&self) -> String {
        hex::encode(&self.0[1..5])
    }

    /// A syntactically valid address with no known secret, for fixtures.
    pub fn from_label(label: &str) -> Address {
        let h = Sha256::digest(label.as_bytes());
        let mut out = [0u8; ADDRESS_LEN];
        out[0] = 0x02;
        out[1..].copy_from_slice(&h);
        Address(out)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.short())
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Address::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SecretKey(pub [u8; 32]);

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey(..)")
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature(pub Vec<u8>);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex::encode(&self.0[..self.0.len().min(6)]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub scheme: SignatureScheme,
    pub address: Address,
    pub secret: SecretKey,
}

impl KeyPair {
    pub fn from_secret(scheme: SignatureScheme, secret: [u8; 32]) -> Result<KeyPair, CryptoError> {
        let address = derive_address(scheme, &secret)?;
        Ok(KeyPair { scheme, address, secret: SecretKey(secret) })
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        sign(self.scheme, &self.secret, message).expect("key pair holds a valid secret")
    }
}

fn null_address(secret: &[u8; 32]) -> Address {
    let mut h = Sha256::new();
    h.update(b"null-signer/address");
    h.update(secret);
    let mut out = [0u8; ADDRESS_LEN];
    out[0] = 0x02;
    out[1..].copy_from_slice(&h.finalize());
    Address(out)
}

fn derive_address(scheme: SignatureScheme, secret: &[u8; 32]) -> Result<Address, CryptoError> {
    match scheme {
        SignatureScheme::Ecdsa => {
            let sk = SigningKey::from_slice(secret).map_err(|_| CryptoError::MalformedKey)?;
            let point = sk.verifying_key().to_encoded_point(true);
            let arr: [u8; ADDRESS_LEN] = point.as_bytes().try_into().map_err(|_| CryptoError::MalformedKey)?;
            Ok(Address(arr))
        }
        SignatureScheme::Null => Ok(null_address(secret)),
    }
}

/// Draws a fresh key pair from a seeded random source.
pub fn gen_keypair<R: RngCore + ?Sized>(scheme: SignatureScheme, rng: &mut R) -> KeyPair {
    loop {
        let mut secret = [0u8; 32];
        rng.fill_bytes(&mut secret);
        // Out-of-range scalars (zero or ≥ group order) are redrawn.
        if let Ok(kp) = KeyPair::from_secret(scheme, secret) {
            return kp;
        }
    }
}

fn null_signature(address: &Address, message: &[u8]) -> Signature {
    let mut h = Sha256::new();
    h.update(address.0);
    h.update(message);
    Signature(h.finalize().to_vec())
}

pub fn sign(scheme: SignatureScheme, secret: &SecretKey, message: &[u8]) -> Result<Signature, CryptoError> {
    match scheme {
        SignatureScheme::Ecdsa => {
            let sk = SigningKey::from_slice(&secret.0).map_err(|_| CryptoError::MalformedKey)?;
            let sig: EcdsaSignature = sk.sign(message);
            Ok(Signature(sig.to_bytes().to_vec()))
        }
        SignatureScheme::Null => Ok(null_signature(&null_address(&secret.0), message)),
    }
}

pub fn verify(scheme: SignatureScheme, address: &Address, message: &[u8], sig: &Signature) -> Result<bool, CryptoError> {
    match scheme {
        SignatureScheme::Ecdsa => {
            let vk = VerifyingKey::from_sec1_bytes(&address.0).map_err(|_| CryptoError::MalformedKey)?;
            let sig = EcdsaSignature::from_slice(&sig.0).map_err(|_| CryptoError::MalformedSignature)?;
            Ok(vk.verify(message, &sig).is_ok())
        }
        SignatureScheme::Null => {
            if sig.0.len() != 32 {
                return Err(CryptoError::MalformedSignature);
            }
            Ok(null_signature(address, message) == *sig)
        }
    }
}
