use std::fmt;

use serde::Serialize;
use sha2::{Digest as _, Sha256};

use super::codec::{CodecError, Reader, Writer};
use super::Amount;
use crate::crypto::{verify, Address, KeyPair, Signature, SignatureScheme};

pub type Nonce = [u8; 16];

/// SHA-256 of the unsigned transaction bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TxId(pub [u8; 32]);

impl TxId {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxId({})", hex::encode(&self.0[..4]))
    }
}

impl Serialize for TxId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

/// Spend of `amount` from `address`. `seq` counts the spends of the address
/// so far; a coin is identified by the pair `(address, seq)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TxInput {
    pub address: Address,
    pub amount: Amount,
    pub seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TxOutput {
    pub address: Address,
    pub amount: Amount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxVariant {
    Ordinary,
    /// Outputs arrive at the block with height `activation`.
    Future { activation: u64 },
    /// Effectuated at the first block end where every input covers its amount.
    ConditionalFuture,
    /// Returns (part of) what `original` paid to the input address.
    Restitution { original: TxId },
    /// Pays the fee and destroys the input address; the residue is burned.
    KeyDestruction,
}

impl TxVariant {
    pub fn tag(&self) -> u8 {
        match self {
            TxVariant::Ordinary => 0,
            TxVariant::Future { .. } => 1,
            TxVariant::ConditionalFuture => 2,
            TxVariant::Restitution { .. } => 3,
            TxVariant::KeyDestruction => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TxVariant::Ordinary => "ordinary",
            TxVariant::Future { .. } => "future",
            TxVariant::ConditionalFuture => "conditional-future",
            TxVariant::Restitution { .. } => "restitution",
            TxVariant::KeyDestruction => "key-destruction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub nonce: Nonce,
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<TxOutput>,
    pub fee: Amount,
    pub variant: TxVariant,
    /// One per input, in input order.
    pub signatures: Vec<Signature>,
}

impl Transaction {
    pub fn unsigned(nonce: Nonce, inputs: Vec<TxInput>, outputs: Vec<TxOutput>, fee: Amount, variant: TxVariant) -> Self {
        Transaction { nonce, inputs, outputs, fee, variant, signatures: Vec::new() }
    }

    /// Signs every input with the key pair whose address matches it.
    pub fn signed(mut self, keys: &[&KeyPair]) -> Self {
        let msg = self.signing_bytes();
        self.signatures = self
            .inputs
            .iter()
            .map(|i| {
                keys.iter()
                    .find(|k| k.address == i.address)
                    .map(|k| k.sign(&msg))
                    .unwrap_or_else(|| Signature(Vec::new()))
            })
            .collect();
        self
    }

    /// Single-input transfer from `key` to `to`.
    pub fn transfer(key: &KeyPair, seq: u64, nonce: Nonce, to: Address, amount: Amount, fee: Amount) -> Self {
        let input = TxInput { address: key.address, amount: Amount(amount.0 + fee.0), seq };
        Transaction::unsigned(nonce, vec![input], vec![TxOutput { address: to, amount }], fee, TxVariant::Ordinary)
            .signed(&[key])
    }

    /// Bytes covered by the input signatures and hashed into the id.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write_body(&mut w);
        w.finish()
    }

    fn write_body(&self, w: &mut Writer) {
        w.u8(super::codec::VERSION).raw(&self.nonce).count(self.inputs.len());
        for i in &self.inputs {
            w.address(&i.address).amount(i.amount).u64(i.seq);
        }
        w.count(self.outputs.len());
        for o in &self.outputs {
            w.address(&o.address).amount(o.amount);
        }
        w.amount(self.fee).u8(self.variant.tag());
        match &self.variant {
            TxVariant::Future { activation } => {
                w.u64(*activation);
            }
            TxVariant::Restitution { original } => {
                w.raw(&original.0);
            }
            _ => {}
        }
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write_body(&mut w);
        w.count(self.signatures.len());
        for s in &self.signatures {
            w.signature(s);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Transaction, CodecError> {
        let mut r = Reader::new(bytes);
        let tx = Transaction::read(&mut r)?;
        r.end()?;
        Ok(tx)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Transaction, CodecError> {
        r.version()?;
        let nonce: Nonce = r.take(16)?.try_into().unwrap();
        let n_in = r.count()?;
        let mut inputs = Vec::with_capacity(n_in);
        for _ in 0..n_in {
            inputs.push(TxInput { address: r.address()?, amount: r.amount()?, seq: r.u64()? });
        }
        let n_out = r.count()?;
        let mut outputs = Vec::with_capacity(n_out);
        for _ in 0..n_out {
            outputs.push(TxOutput { address: r.address()?, amount: r.amount()? });
        }
        let fee = r.amount()?;
        let at = r.offset();
        let variant = match r.u8()? {
            0 => TxVariant::Ordinary,
            1 => TxVariant::Future { activation: r.u64()? },
            2 => TxVariant::ConditionalFuture,
            3 => TxVariant::Restitution { original: TxId(r.take(32)?.try_into().unwrap()) },
            4 => TxVariant::KeyDestruction,
            tag => return Err(CodecError::BadTag { offset: at, tag }),
        };
        let n_sig = r.count()?;
        let mut signatures = Vec::with_capacity(n_sig);
        for _ in 0..n_sig {
            signatures.push(r.signature()?);
        }
        Ok(Transaction { nonce, inputs, outputs, fee, variant, signatures })
    }

    pub fn id(&self) -> TxId {
        TxId(Sha256::digest(self.signing_bytes()).into())
    }

    pub fn input_total(&self) -> Option<Amount> {
        super::checked_sum(self.inputs.iter().map(|i| i.amount))
    }

    pub fn output_total(&self) -> Option<Amount> {
        super::checked_sum(self.outputs.iter().map(|o| o.amount))
    }

    /// Address whose first input funds the transaction; restitutions go back
    /// to it.
    pub fn sender(&self) -> Option<Address> {
        self.inputs.first().map(|i| i.address)
    }

    /// True when there is one signature per input and each verifies.
    pub fn signatures_valid(&self, scheme: SignatureScheme) -> bool {
        if self.signatures.len() != self.inputs.len() {
            return false;
        }
        let msg = self.signing_bytes();
        self.inputs
            .iter()
            .zip(&self.signatures)
            .all(|(i, s)| verify(scheme, &i.address, &msg, s).unwrap_or(false))
    }

    /// The `(address, seq)` coin this transaction shares with `other`, if any.
    pub fn shared_coin(&self, other: &Transaction) -> Option<(Address, u64)> {
        self.inputs.iter().find_map(|a| {
            other
                .inputs
                .iter()
                .any(|b| a.address == b.address && a.seq == b.seq)
                .then_some((a.address, a.seq))
        })
    }
}

/// Two distinct signed transactions spending the same coin.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DoubleSpendProof {
    pub first: Transaction,
    pub second: Transaction,
}

impl DoubleSpendProof {
    pub fn write(&self, w: &mut Writer) {
        w.bytes(&self.first.canonical_bytes()).bytes(&self.second.canonical_bytes());
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<DoubleSpendProof, CodecError> {
        let first = Transaction::from_bytes(r.bytes()?)?;
        let second = Transaction::from_bytes(r.bytes()?)?;
        Ok(DoubleSpendProof { first, second })
    }
}
