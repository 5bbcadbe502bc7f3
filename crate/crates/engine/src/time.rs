use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// Discrete simulation time, measured in abstract steps since the run began.
///
/// One network delay bound `delta` spans `delta` steps, so a synchronous
/// round is `delta` ticks of this clock. The clock never runs backwards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VirtualTime(pub u64);

impl VirtualTime {
    pub const ZERO: VirtualTime = VirtualTime(0);

    /// Raw step count.
    pub fn steps(self) -> u64 {
        self.0
    }

    /// Saturating distance to an earlier instant (0 if `earlier` is later).
    pub fn since(self, earlier: VirtualTime) -> u64 {
        self.0.saturating_sub(earlier.0)
    }
}

impl Add<u64> for VirtualTime {
    type Output = VirtualTime;
    fn add(self, steps: u64) -> VirtualTime {
        VirtualTime(self.0 + steps)
    }
}

impl AddAssign<u64> for VirtualTime {
    fn add_assign(&mut self, steps: u64) {
        self.0 += steps;
    }
}

impl Sub for VirtualTime {
    type Output = u64;
    fn sub(self, rhs: VirtualTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for VirtualTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_arithmetic() {
        let a = VirtualTime(3);
        let b = a + 4;
        assert_eq!(b, VirtualTime(7));
        assert!(a < b);
        assert_eq!(b - a, 4);
        assert_eq!(a.since(b), 0);
        assert_eq!(b.since(a), 4);
    }
}
