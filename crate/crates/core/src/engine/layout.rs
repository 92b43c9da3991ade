/// Handle for one quantum register inside an [`Engine`](super::Engine).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterEntry {
    pub id: RegId,
    pub offset: u32,
    pub width: u32,
}

/// Live registers in allocation order; offsets are contiguous from bit 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegisterLayout {
    entries: Vec<RegisterEntry>,
}

impl RegisterLayout {
    pub fn total_bits(&self) -> u32 {
        self.entries.last().map_or(0, |e| e.offset + e.width)
    }

    pub fn get(&self, id: RegId) -> Option<&RegisterEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn entries(&self) -> &[RegisterEntry] {
        &self.entries
    }

    pub(super) fn push(&mut self, id: RegId, width: u32) {
        let offset = self.total_bits();
        self.entries.push(RegisterEntry { id, offset, width });
    }

    pub(super) fn remove(&mut self, id: RegId) {
        if let Some(pos) = self.entries.iter().position(|e| e.id == id) {
            let removed = self.entries.remove(pos);
            for e in &mut self.entries[pos..] {
                e.offset -= removed.width;
            }
        }
    }
}
