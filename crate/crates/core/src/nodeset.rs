use alloc::vec;
use alloc::vec::Vec;

/// Fixed-universe bit set over node ids `0..capacity`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet {
    words: Vec<u64>,
    len: usize,
}

impl NodeSet {
    pub fn new(capacity: usize) -> Self {
        NodeSet {
            words: vec![0; capacity.div_ceil(64)],
            len: 0,
        }
    }

    pub fn from_nodes(capacity: usize, nodes: impl IntoIterator<Item = usize>) -> Self {
        let mut set = NodeSet::new(capacity);
        for v in nodes {
            set.insert(v);
        }
        set
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.words
            .get(v / 64)
            .is_some_and(|w| w & (1u64 << (v % 64)) != 0)
    }

    /// Returns `true` if `v` was not yet present.
    pub fn insert(&mut self, v: usize) -> bool {
        let idx = v / 64;
        if idx >= self.words.len() {
            self.words.resize(idx + 1, 0);
        }
        let bit = 1u64 << (v % 64);
        let fresh = self.words[idx] & bit == 0;
        if fresh {
            self.words[idx] |= bit;
            self.len += 1;
        }
        fresh
    }

    pub fn remove(&mut self, v: usize) -> bool {
        let Some(word) = self.words.get_mut(v / 64) else {
            return false;
        };
        let bit = 1u64 << (v % 64);
        let present = *word & bit != 0;
        if present {
            *word &= !bit;
            self.len -= 1;
        }
        present
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Ascending iteration over members.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            core::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + tz)
            })
        })
    }
}
