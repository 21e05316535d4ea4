use crate::fd::{Domains, Inconsistent, Propagator, VarId};

/// `x ≠ y + c`, filtered only when one side is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeqOffset {
    pub x: VarId,
    pub y: VarId,
    pub c: i64,
}

impl NeqOffset {
    pub fn new(x: VarId, y: VarId, c: i64) -> Self {
        NeqOffset { x, y, c }
    }
}

impl Propagator for NeqOffset {
    fn watched(&self) -> Vec<VarId> {
        vec![self.x, self.y]
    }

    fn filter(&self, d: &mut Domains) -> Result<(), Inconsistent> {
        if self.x == self.y {
            return if self.c == 0 {
                Err(Inconsistent)
            } else {
                Ok(())
            };
        }
        if let Some(v) = d.value(self.x) {
            d.remove(self.y, v - self.c)?;
        }
        if let Some(w) = d.value(self.y) {
            d.remove(self.x, w + self.c)?;
        }
        Ok(())
    }
}
