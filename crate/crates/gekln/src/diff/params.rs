use super::tensor::Tensor;

/// Handle to a named parameter slot in a [`ParameterStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotId(pub(crate) usize);

impl SlotId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// One learnable tensor: value, same-shape gradient, and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub(crate) m: Tensor,
    pub(crate) v: Tensor,
}

/// All learnable tensors of a model, with gradient slots and shared
/// optimizer state. Slot order is the allocation order and is part of
/// the checkpoint format.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterStore {
    slots: Vec<Slot>,
    pub(crate) step: u64,
}

impl ParameterStore {
    pub fn new() -> Self {
        ParameterStore::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> SlotId {
        let [r, c] = value.shape();
        self.slots.push(Slot {
            name: name.into(),
            grad: Tensor::zeros(r, c),
            m: Tensor::zeros(r, c),
            v: Tensor::zeros(r, c),
            value,
        });
        SlotId(self.slots.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn value(&self, id: SlotId) -> &Tensor {
        &self.slots[id.0].value
    }

    pub fn value_mut(&mut self, id: SlotId) -> &mut Tensor {
        &mut self.slots[id.0].value
    }

    pub fn grad(&self, id: SlotId) -> &Tensor {
        &self.slots[id.0].grad
    }

    pub fn grad_mut(&mut self, id: SlotId) -> &mut Tensor {
        &mut self.slots[id.0].grad
    }

    pub fn name(&self, id: SlotId) -> &str {
        &self.slots[id.0].name
    }

    pub fn find(&self, name: &str) -> Option<SlotId> {
        self.slots.iter().position(|s| s.name == name).map(SlotId)
    }

    pub fn ids(&self) -> impl Iterator<Item = SlotId> {
        (0..self.slots.len()).map(SlotId)
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub(crate) fn slots_mut(&mut self) -> &mut [Slot] {
        &mut self.slots
    }

    /// Optimizer step counter (number of `optimizer_step` calls so far).
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn zero_grads(&mut self) {
        for s in &mut self.slots {
            s.grad.fill(0.0);
        }
    }

    /// Snapshot of all parameter values in slot order.
    pub fn values_snapshot(&self) -> Vec<Tensor> {
        self.slots.iter().map(|s| s.value.clone()).collect()
    }

    /// Restore parameter values from a snapshot taken on an identically
    /// laid out store. Optimizer state is left untouched.
    pub fn load_values(&mut self, values: &[Tensor]) {
        assert_eq!(values.len(), self.slots.len(), "snapshot layout mismatch");
        for (s, v) in self.slots.iter_mut().zip(values) {
            assert_eq!(s.value.shape(), v.shape(), "snapshot shape mismatch");
            s.value = v.clone();
        }
    }

    pub(crate) fn restore_slot(&mut self, id: SlotId, value: Tensor, m: Tensor, v: Tensor) {
        let s = &mut self.slots[id.0];
        s.value = value;
        s.m = m;
        s.v = v;
    }

    pub(crate) fn moments(&self, id: SlotId) -> (&Tensor, &Tensor) {
        (&self.slots[id.0].m, &self.slots[id.0].v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_and_lookup() {
        let mut store = ParameterStore::new();
        let id = store.add("u", Tensor::zeros(3, 2));
        assert_eq!(store.find("u"), Some(id));
        assert_eq!(store.grad(id).shape(), [3, 2]);
        assert_eq!(store.name(id), "u");
        assert!(store.find("missing").is_none());
    }

    #[test]
    fn snapshot_roundtrip() {
        let mut store = ParameterStore::new();
        let id = store.add("w", Tensor::from_vec(1, 2, vec![1.0, 2.0]));
        let snap = store.values_snapshot();
        store.value_mut(id).fill(9.0);
        store.load_values(&snap);
        assert_eq!(store.value(id).data(), &[1.0, 2.0]);
    }
}
