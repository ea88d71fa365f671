use std::collections::HashMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::folds::Window;
use crate::spec::Model;

/// Identity of a fitted nuisance instance: node, training window and the
/// keys of everything upstream of it.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct InstanceKey([u8; 32]);

fn put_str(h: &mut Sha256, s: &str) {
    h.update((s.len() as u64).to_le_bytes());
    h.update(s.as_bytes());
}

impl InstanceKey {
    pub fn compute(node: &str, signature: &str, window: &Window, deps: &[(&str, InstanceKey)]) -> Self {
        let mut h = Sha256::new();
        put_str(&mut h, node);
        put_str(&mut h, signature);
        for v in [window.start(), window.width(), window.k(), deps.len()] {
            h.update((v as u64).to_le_bytes());
        }
        for (name, key) in deps {
            put_str(&mut h, name);
            h.update(key.0);
        }
        InstanceKey(h.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InstanceKey({})", &self.to_hex()[..12])
    }
}

/// Fitted models of one repetition, shared by the methods of a group.
pub(crate) struct ModelCache {
    enabled: bool,
    models: HashMap<InstanceKey, Model>,
}

impl ModelCache {
    pub(crate) fn new(enabled: bool) -> Self {
        Self {
            enabled,
            models: HashMap::new(),
        }
    }

    pub(crate) fn get(&self, key: &InstanceKey) -> Option<Model> {
        self.models.get(key).cloned()
    }

    pub(crate) fn put(&mut self, key: InstanceKey, model: Model) {
        if self.enabled {
            self.models.insert(key, model);
        }
    }
}
