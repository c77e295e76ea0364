use crate::sim::{Source, Transition};
use ndarray::{Array1, Array2};
use rand::Rng;

/// Transition store. Experience buffers evict FIFO at capacity; demo
/// buffers are filled once and never change afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    kind: Source,
    capacity: usize,
    data: Vec<Transition>,
    head: usize,
}

impl ReplayBuffer {
    pub fn experience(capacity: usize) -> Self {
        Self {
            kind: Source::Experience,
            capacity: capacity.max(1),
            data: Vec::new(),
            head: 0,
        }
    }

    pub fn demo(transitions: Vec<Transition>) -> Self {
        Self {
            kind: Source::Demo,
            capacity: transitions.len(),
            data: transitions,
            head: 0,
        }
    }

    pub fn kind(&self) -> Source {
        self.kind
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.data
    }

    /// Appends to an experience buffer.
    ///
    /// # Panics
    /// On a demo buffer.
    pub fn push(&mut self, t: Transition) {
        assert_eq!(self.kind, Source::Experience, "demo buffers are static");
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// `n` uniform draws with replacement.
    pub fn sample<'a>(&'a self, n: usize, rng: &mut impl Rng) -> Vec<&'a Transition> {
        if self.data.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| &self.data[rng.random_range(0..self.data.len())]).collect()
    }
}

/// Transitions stacked row-wise, actions in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub s: Array2<f64>,
    pub a: Array2<f64>,
    pub r: Array1<f64>,
    pub s_next: Array2<f64>,
    pub done: Array1<f64>,
}

impl Batch {
    pub fn new(items: &[&Transition]) -> Self {
        let n = items.len();
        let d = items.first().map_or(0, |t| t.s.len());
        let mut b = Batch {
            s: Array2::zeros((n, d)),
            a: Array2::zeros((n, 2)),
            r: Array1::zeros(n),
            s_next: Array2::zeros((n, d)),
            done: Array1::zeros(n),
        };
        for (i, t) in items.iter().enumerate() {
            b.s.row_mut(i).assign(&ndarray::ArrayView1::from(t.s.as_slice()));
            b.s_next.row_mut(i).assign(&ndarray::ArrayView1::from(t.s_next.as_slice()));
            let u = t.a.normalized();
            b.a[[i, 0]] = u[0];
            b.a[[i, 1]] = u[1];
            b.r[i] = t.r;
            b.done[i] = if t.done { 1.0 } else { 0.0 };
        }
        b
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Row-wise concatenation.
    pub fn concat(&self, other: &Batch) -> Batch {
        use ndarray::{concatenate, Axis};
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        Batch {
            s: concatenate![Axis(0), self.s, other.s],
            a: concatenate![Axis(0), self.a, other.a],
            r: concatenate![Axis(0), self.r, other.r],
            s_next: concatenate![Axis(0), self.s_next, other.s_next],
            done: concatenate![Axis(0), self.done, other.done],
        }
    }
}
