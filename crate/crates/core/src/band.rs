use std::fmt;

/// Band label `eps` of a form factor `g_eps`; the two energy bands of the
/// reservoir play the role of the two atomic levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    Zero,
    One,
}

impl Band {
    pub const BOTH: [Band; 2] = [Band::Zero, Band::One];

    pub fn flip(self) -> Band {
        match self {
            Band::Zero => Band::One,
            Band::One => Band::Zero,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Band::Zero => 0,
            Band::One => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Band> {
        match i {
            0 => Some(Band::Zero),
            1 => Some(Band::One),
            _ => None,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}
