use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::net::{Net, PlaceId, TransId};

/// Order in which rule candidates are scanned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CandidateOrder {
    /// Net declaration order.
    #[default]
    Declaration,
    /// A pseudo-random order keyed by name, reproducible from the seed.
    Shuffled(u64),
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

impl CandidateOrder {
    /// Sort key of an element; ties are broken by position.
    pub(crate) fn rank(self, name: &str, index: usize) -> (u64, usize) {
        match self {
            CandidateOrder::Declaration => (index as u64, index),
            CandidateOrder::Shuffled(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ name_hash(name));
                (rng.next_u64(), index)
            }
        }
    }

    pub(crate) fn places(self, net: &Net) -> Vec<PlaceId> {
        let mut ps: Vec<PlaceId> = net.place_ids().collect();
        ps.sort_by_cached_key(|&p| self.rank(net.place_name(p), p.index()));
        ps
    }

    pub(crate) fn transitions(self, net: &Net) -> Vec<TransId> {
        let mut ts: Vec<TransId> = net.transition_ids().collect();
        ts.sort_by_cached_key(|&t| self.rank(net.transition_name(t), t.index()));
        ts
    }

    pub(crate) fn place_before(self, net: &Net, a: PlaceId, b: PlaceId) -> bool {
        self.rank(net.place_name(a), a.index()) < self.rank(net.place_name(b), b.index())
    }

    pub(crate) fn transition_before(self, net: &Net, a: TransId, b: TransId) -> bool {
        self.rank(net.transition_name(a), a.index()) < self.rank(net.transition_name(b), b.index())
    }
}
