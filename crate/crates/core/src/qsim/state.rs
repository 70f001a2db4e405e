use std::collections::HashMap;

use num_complex::Complex64;

use super::QsimError;
use crate::analysis::Packing;
use crate::zq::{binary_rep, BitString, Modulus, ZqVector};

/// One basis term. `x` is packed with the state's [`Packing`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub b: u8,
    pub tag: u16,
    pub x: u128,
    pub amp: Complex64,
}

impl Term {
    pub fn weight(&self) -> f64 {
        self.amp.norm_sqr()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProverState {
    packing: Packing,
    terms: Vec<Term>,
}

const NORM_TOL: f64 = 1e-9;

impl ProverState {
    /// Builds a state from terms that are already normalized and distinct.
    pub fn new(packing: Packing, terms: Vec<Term>) -> Result<Self, QsimError> {
        let state = Self { packing, terms };
        state.check()?;
        Ok(state)
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm, dropping zero terms.
    pub fn normalized(packing: Packing, mut terms: Vec<Term>) -> Result<Self, QsimError> {
        terms.retain(|t| t.weight() > 0.0);
        let total: f64 = terms.iter().map(Term::weight).sum();
        if terms.is_empty() || total <= 0.0 {
            return Err(QsimError::EmptyState);
        }
        let scale = total.sqrt().recip();
        for t in &mut terms {
            t.amp *= scale;
        }
        Self::new(packing, terms)
    }

    /// A single basis state `|b, x⟩` with tag 0.
    pub fn point(packing: Packing, b: bool, x: &ZqVector) -> Self {
        Self { packing, terms: vec![Term { b: b as u8, tag: 0, x: packing.pack(x), amp: Complex64::new(1.0, 0.0) }] }
    }

    fn check(&self) -> Result<(), QsimError> {
        if self.terms.is_empty() {
            return Err(QsimError::EmptyState);
        }
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QsimError::NotNormalized(norm));
        }
        let key = |t: &Term| (t.b, t.tag, t.x);
        if self.terms.windows(2).all(|w| key(&w[0]) < key(&w[1])) {
            return Ok(());
        }
        let mut keys: Vec<_> = self.terms.iter().map(key).collect();
        keys.sort_unstable();
        match keys.windows(2).find(|w| w[0] == w[1]) {
            Some(w) => Err(QsimError::DuplicateTerm { b: w[0].0, tag: w[0].1 }),
            None => Ok(()),
        }
    }

    pub fn packing(&self) -> Packing {
        self.packing
    }

    pub fn modulus(&self) -> Modulus {
        self.packing.modulus()
    }

    /// `n·⌈log₂ q⌉`, the length of `J(x)` and of the Hadamard outcome `d`.
    pub fn w(&self) -> usize {
        self.packing.n() * self.modulus().bits() as usize
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(Term::weight).sum()
    }

    pub fn x_of(&self, term: &Term) -> ZqVector {
        self.packing.unpack(term.x)
    }

    pub fn binary_x(&self, term: &Term) -> BitString {
        binary_rep(&self.x_of(term))
    }

    /// Total weight in branch `b`.
    pub fn sector_weight(&self, b: bool) -> f64 {
        self.terms.iter().filter(|t| t.b == b as u8).map(Term::weight).sum()
    }

    /// Distribution of the standard-basis outcome `(b, x)`, tags traced out.
    pub fn outcome_probabilities(&self) -> HashMap<(u8, u128), f64> {
        let mut out = HashMap::with_capacity(self.terms.len());
        for t in &self.terms {
            *out.entry((t.b, t.x)).or_insert(0.0) += t.weight();
        }
        out
    }

    /// Rescales the two branches to total weights `α²` and `1 − α²`. A branch
    /// with no support is left empty and the result renormalized.
    pub fn reweight_sectors(&self, alpha: f64) -> Result<Self, QsimError> {
        let w0 = self.sector_weight(false);
        let w1 = self.sector_weight(true);
        let target = [alpha * alpha, 1.0 - alpha * alpha];
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let (have, want) = if t.b == 0 { (w0, target[0]) } else { (w1, target[1]) };
                Term { amp: t.amp * (want / have).sqrt(), ..*t }
            })
            .collect();
        Self::normalized(self.packing, terms)
    }
}
