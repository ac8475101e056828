use super::codec::{CodecError, Reader, Writer, VERSION};
use super::{Amount, ChainParams, DoubleSpendProof, Transaction};
use crate::crypto::{verify, Address, Digest, HashAlg, KeyPair, Puzzle, Signature, Solution};

/// The tuple `(d, n, m, g, h, P, s)`. The puzzle is stored as its seed; the
/// target follows from `m`, `n` and the chain parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MiningStep {
    pub d: Address,
    pub n: u64,
    pub m: u64,
    pub g: Amount,
    pub h: Amount,
    pub seed: Digest,
    pub s: Solution,
}

impl MiningStep {
    pub fn puzzle(&self, params: &ChainParams) -> Puzzle {
        Puzzle::new(params.hash, self.seed.clone(), self.m, params.alpha, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    pub k: u64,
    /// Digest of the predecessor; `None` only for the genesis block.
    pub prev: Option<Digest>,
    pub txs: Vec<Transaction>,
    /// Double-spend evidence, processed before `txs`.
    pub evidence: Vec<DoubleSpendProof>,
    pub step: MiningStep,
    /// Signature by the key of `step.d` over every preceding byte.
    pub miner_sig: Signature,
}

/// Deterministic puzzle seed binding the puzzle to the block contents.
#[allow(clippy::too_many_arguments)]
pub fn puzzle_seed(
    alg: HashAlg,
    k: u64,
    prev: Option<&Digest>,
    txs: &[Transaction],
    evidence: &[DoubleSpendProof],
    d: &Address,
    n: u64,
    m: u64,
    g: Amount,
    h: Amount,
) -> Digest {
    let mut tw = Writer::new();
    for t in txs {
        tw.bytes(&t.canonical_bytes());
    }
    let mut ew = Writer::new();
    for e in evidence {
        e.write(&mut ew);
    }
    let mut w = Writer::new();
    w.u64(k)
        .digest(prev)
        .raw(&alg.digest(&tw.buf).0)
        .raw(&alg.digest(&ew.buf).0)
        .address(d)
        .u64(n)
        .u64(m)
        .amount(g)
        .amount(h);
    alg.digest(&w.buf)
}

impl Block {
    fn write_unsigned(&self, w: &mut Writer) {
        w.u8(VERSION).u64(self.k).digest(self.prev.as_ref()).count(self.txs.len());
        for t in &self.txs {
            w.bytes(&t.canonical_bytes());
        }
        w.count(self.evidence.len());
        for e in &self.evidence {
            e.write(w);
        }
        let s = &self.step;
        w.address(&s.d).u64(s.n).u64(s.m).amount(s.g).amount(s.h).digest(Some(&s.seed)).u64(s.s.0);
    }

    /// The bytes the miner signs.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write_unsigned(&mut w);
        w.finish()
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write_unsigned(&mut w);
        w.signature(&self.miner_sig);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Block, CodecError> {
        let mut r = Reader::new(bytes);
        r.version()?;
        let k = r.u64()?;
        let prev = r.digest()?;
        let n_tx = r.count()?;
        let mut txs = Vec::with_capacity(n_tx);
        for _ in 0..n_tx {
            txs.push(Transaction::from_bytes(r.bytes()?)?);
        }
        let n_ev = r.count()?;
        let mut evidence = Vec::with_capacity(n_ev);
        for _ in 0..n_ev {
            evidence.push(DoubleSpendProof::read(&mut r)?);
        }
        let d = r.address()?;
        let n = r.u64()?;
        let m = r.u64()?;
        let g = r.amount()?;
        let h = r.amount()?;
        let at = r.offset();
        let seed = r.digest()?.ok_or(CodecError::BadTag { offset: at, tag: 0 })?;
        let s = Solution(r.u64()?);
        let miner_sig = r.signature()?;
        r.end()?;
        Ok(Block { k, prev, txs, evidence, step: MiningStep { d, n, m, g, h, seed, s }, miner_sig })
    }

    pub fn digest(&self, alg: HashAlg) -> Digest {
        alg.digest(&self.canonical_bytes())
    }

    pub fn expected_seed(&self, alg: HashAlg) -> Digest {
        let s = &self.step;
        puzzle_seed(alg, self.k, self.prev.as_ref(), &self.txs, &self.evidence, &s.d, s.n, s.m, s.g, s.h)
    }

    pub fn sign(&mut self, key: &KeyPair) {
        self.miner_sig = key.sign(&self.signing_bytes());
    }

    pub fn miner_signature_valid(&self, params: &ChainParams) -> bool {
        verify(params.signature, &self.step.d, &self.signing_bytes(), &self.miner_sig).unwrap_or(false)
    }
}
