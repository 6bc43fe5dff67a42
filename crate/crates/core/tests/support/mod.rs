//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use swarm_lob::{MatchOutcome, Order, OrderBook, Price, Side};

/// Keeps every resting order in one arrival-ordered list and scans it
/// linearly.
#[derive(Default)]
pub struct ReferenceBook {
    pub orders: Vec<Order>,
}

impl ReferenceBook {
    pub fn insert(&mut self, side: Side, price: Price, id: u64) -> MatchOutcome {
        let crosses = |o: &Order| {
            o.side != side
                && match side {
                    Side::Bid => o.price <= price,
                    Side::Ask => o.price >= price,
                }
        };
        // best opposing price first, then earliest arrival
        let best = self
            .orders
            .iter()
            .enumerate()
            .filter(|(_, o)| crosses(o))
            .min_by_key(|(_, o)| (if side == Side::Bid { o.price } else { -o.price }, o.id))
            .map(|(i, _)| i);
        match best {
            Some(i) => {
                let o = self.orders.remove(i);
                MatchOutcome::Traded { price: o.price, resting_id: o.id }
            }
            None => {
                self.orders.push(Order { id, side, price });
                MatchOutcome::Rested
            }
        }
    }

    pub fn expire_all(&mut self, base: Price, hw: i64) -> usize {
        let before = self.orders.len();
        self.orders.retain(|o| (o.price - base).abs() <= hw);
        before - self.orders.len()
    }

    pub fn expire_oldest(&mut self, base: Price, hw: i64) -> Option<Order> {
        let i = self.orders.iter().position(|o| (o.price - base).abs() > hw)?;
        Some(self.orders.remove(i))
    }

    pub fn best(&self, side: Side) -> Option<Price> {
        let prices = self.orders.iter().filter(|o| o.side == side).map(|o| o.price);
        match side {
            Side::Bid => prices.max(),
            Side::Ask => prices.min(),
        }
    }

    pub fn sorted(&self) -> Vec<(u64, Price, bool)> {
        let mut v: Vec<_> = self.orders.iter().map(|o| (o.id, o.price, o.side == Side::Bid)).collect();
        v.sort_unstable();
        v
    }
}

/// Resting orders of `book` as `(id, price, is_bid)`, sorted by id.
pub fn snapshot(book: &OrderBook) -> Vec<(u64, Price, bool)> {
    let mut v: Vec<_> = book.orders().map(|o| (o.id, o.price, o.side == Side::Bid)).collect();
    v.sort_unstable();
    v
}

/// Adaptive Simpson quadrature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

