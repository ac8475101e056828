pub mod accounting;
pub mod consensus;
pub mod crypto;
pub mod extensions;
pub mod ledger;
pub mod netsim;
pub mod numerics;
pub mod promises;
