//! Leg numbering and leg sets.
//!
//! Legs are numbered around the body: 0 right-front, 1 right-middle,
//! 2 right-rear, 3 left-rear, 4 left-middle, 5 left-front.

use serde::{Deserialize, Serialize};

pub const LEGS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    Front,
    Middle,
    Rear,
}

pub fn side(leg: usize) -> Side {
    if leg < 3 {
        Side::Right
    } else {
        Side::Left
    }
}

pub fn position(leg: usize) -> Position {
    match leg {
        0 | 5 => Position::Front,
        1 | 4 => Position::Middle,
        _ => Position::Rear,
    }
}

/// The contralateral leg (same position, other side).
pub fn mirror(leg: usize) -> usize {
    5 - leg
}

/// A subset of the six legs, stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LegSet(u8);

impl LegSet {
    pub const EMPTY: LegSet = LegSet(0);
    pub const ALL: LegSet = LegSet(0b11_1111);

    pub fn from_bits(bits: u8) -> Self {
        LegSet(bits & Self::ALL.0)
    }

    pub fn from_legs(legs: &[usize]) -> Self {
        let mut s = LegSet::EMPTY;
        for &l in legs {
            s.insert(l);
        }
        s
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, leg: usize) -> bool {
        leg < LEGS && self.0 & (1 << leg) != 0
    }

    pub fn insert(&mut self, leg: usize) {
        if leg < LEGS {
            self.0 |= 1 << leg;
        }
    }

    pub fn remove(&mut self, leg: usize) {
        if leg < LEGS {
            self.0 &= !(1 << leg);
        }
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: LegSet) -> LegSet {
        LegSet(self.0 | other.0)
    }

    pub fn intersection(self, other: LegSet) -> LegSet {
        LegSet(self.0 & other.0)
    }

    pub fn difference(self, other: LegSet) -> LegSet {
        LegSet(self.0 & !other.0)
    }

    pub fn complement(self) -> LegSet {
        LegSet(!self.0 & Self::ALL.0)
    }

    pub fn mirrored(self) -> LegSet {
        let mut s = LegSet::EMPTY;
        for l in self.iter() {
            s.insert(mirror(l));
        }
        s
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..LEGS).filter(move |&l| self.contains(l))
    }
}

/// Tracks contact history and reports landing events (no-contact to contact).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContactTracker {
    previous: LegSet,
}

impl ContactTracker {
    pub fn new(initial: LegSet) -> Self {
        ContactTracker { previous: initial }
    }

    /// Records the current contact set and returns the legs that just landed.
    pub fn update(&mut self, current: LegSet) -> LegSet {
        let rising = current.difference(self.previous);
        self.previous = current;
        rising
    }

    pub fn previous(&self) -> LegSet {
        self.previous
    }
}
