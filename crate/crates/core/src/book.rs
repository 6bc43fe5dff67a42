//! Continuous double auction order book.
//!
//! Every order carries exactly one unit, so an incoming order that crosses
//! the book is filled completely by a single resting order. Bids are served
//! highest price first, asks lowest price first, and orders at the same price
//! are served in arrival order. A trade always executes at the price of the
//! order that was resting on the book.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Price on the integer tick grid. The sign carries no meaning.
pub type Price = i64;

/// Sequence number assigned at placement time.
pub type OrderId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Bid => f.write_str("bid"),
            Side::Ask => f.write_str("ask"),
        }
    }
}

/// A resting one-unit limit order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Order {
    pub id: OrderId,
    pub side: Side,
    pub price: Price,
}

impl Order {
    /// Orders are always for a single unit.
    pub const VOLUME: u32 = 1;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchOutcome {
    /// The order did not cross and now rests on the book.
    Rested,
    /// The order crossed and executed against `resting_id` at `price`.
    Traded { price: Price, resting_id: OrderId },
}

impl MatchOutcome {
    pub fn trade_price(&self) -> Option<Price> {
        match *self {
            MatchOutcome::Traded { price, .. } => Some(price),
            MatchOutcome::Rested => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BookError {
    #[error("order id {id} is not greater than the last id {last} seen by the book")]
    NonIncreasingId { id: OrderId, last: OrderId },
}

/// One side of the book: price levels holding FIFO queues of order ids.
#[derive(Debug, Clone, Default)]
struct Ladder {
    levels: BTreeMap<Price, VecDeque<OrderId>>,
    len: usize,
}

impl Ladder {
    fn push(&mut self, price: Price, id: OrderId) {
        self.levels.entry(price).or_default().push_back(id);
        self.len += 1;
    }

    fn min_price(&self) -> Option<Price> {
        self.levels.keys().next().copied()
    }

    fn max_price(&self) -> Option<Price> {
        self.levels.keys().next_back().copied()
    }

    /// Pops the oldest order at `price`. The level must exist.
    fn pop_front_at(&mut self, price: Price) -> OrderId {
        let queue = self.levels.get_mut(&price).expect("price level present");
        let id = queue.pop_front().expect("non-empty level");
        if queue.is_empty() {
            self.levels.remove(&price);
        }
        self.len -= 1;
        id
    }

    /// Removes every level strictly outside `[lo, hi]`, returning the number of
    /// orders dropped.
    fn retain_within(&mut self, lo: Price, hi: Price) -> usize {
        let mut kept = self.levels.split_off(&lo);
        let above = kept.split_off(&(hi + 1));
        let removed: usize = self.levels.values().chain(above.values()).map(VecDeque::len).sum();
        self.levels = kept;
        self.len -= removed;
        removed
    }

    /// Oldest order (smallest id) outside `[lo, hi]`, as `(id, price)`.
    fn oldest_outside(&self, lo: Price, hi: Price) -> Option<(OrderId, Price)> {
        self.levels
            .range(..lo)
            .chain(self.levels.range(hi + 1..))
            .filter_map(|(&p, q)| q.front().map(|&id| (id, p)))
            .min()
    }

    fn remove_id(&mut self, price: Price, id: OrderId) {
        let queue = self.levels.get_mut(&price).expect("price level present");
        let pos = queue.iter().position(|&x| x == id).expect("id present at level");
        queue.remove(pos);
        if queue.is_empty() {
            self.levels.remove(&price);
        }
        self.len -= 1;
    }

    fn iter(&self) -> impl Iterator<Item = (Price, OrderId)> + '_ {
        self.levels.iter().flat_map(|(&p, q)| q.iter().map(move |&id| (p, id)))
    }
}

/// Price-priority, FIFO-within-price order book of one-unit limit orders.
#[derive(Debug, Clone, Default)]
pub struct OrderBook {
    bids: Ladder,
    asks: Ladder,
    last_id: Option<OrderId>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn best_bid(&self) -> Option<Price> {
        self.bids.max_price()
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.asks.min_price()
    }

    pub fn len(&self) -> usize {
        self.bids.len + self.asks.len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bid_count(&self) -> usize {
        self.bids.len
    }

    pub fn ask_count(&self) -> usize {
        self.asks.len
    }

    /// Places a one-unit limit order.
    ///
    /// A bid priced at or above the best ask (or an ask at or below the best
    /// bid) executes immediately against the oldest order at the best opposing
    /// price, and the trade prints at that resting order's price. Otherwise
    /// the order joins the back of its price level.
    pub fn insert_limit(&mut self, side: Side, price: Price, id: OrderId) -> Result<MatchOutcome, BookError> {
        if let Some(last) = self.last_id {
            if id <= last {
                return Err(BookError::NonIncreasingId { id, last });
            }
        }
        self.last_id = Some(id);

        let crossing = match side {
            Side::Bid => self.asks.min_price().filter(|&ask| price >= ask),
            Side::Ask => self.bids.max_price().filter(|&bid| price <= bid),
        };
        let (own, opposing) = match side {
            Side::Bid => (&mut self.bids, &mut self.asks),
            Side::Ask => (&mut self.asks, &mut self.bids),
        };
        match crossing {
            Some(resting_price) => {
                let resting_id = opposing.pop_front_at(resting_price);
                Ok(MatchOutcome::Traded { price: resting_price, resting_id })
            }
            None => {
                own.push(price, id);
                Ok(MatchOutcome::Rested)
            }
        }
    }

    /// True if any resting order lies strictly farther than `half_width`
    /// ticks from `base`.
    pub fn has_out_of_range(&self, base: Price, half_width: i64) -> bool {
        let lo = base - half_width;
        let hi = base + half_width;
        [self.bids.min_price(), self.asks.min_price()].into_iter().flatten().any(|p| p < lo)
            || [self.bids.max_price(), self.asks.max_price()].into_iter().flatten().any(|p| p > hi)
    }

    /// Removes every order with `|price - base| > half_width` and returns how
    /// many were removed. Orders exactly at `base ± half_width` stay.
    pub fn expire_out_of_range(&mut self, base: Price, half_width: i64) -> usize {
        let lo = base - half_width;
        let hi = base + half_width;
        self.bids.retain_within(lo, hi) + self.asks.retain_within(lo, hi)
    }

    /// Removes only the oldest out-of-range order, if any.
    pub fn expire_oldest_out_of_range(&mut self, base: Price, half_width: i64) -> Option<Order> {
        let lo = base - half_width;
        let hi = base + half_width;
        let bid = self.bids.oldest_outside(lo, hi).map(|(id, p)| (id, p, Side::Bid));
        let ask = self.asks.oldest_outside(lo, hi).map(|(id, p)| (id, p, Side::Ask));
        let (id, price, side) = match (bid, ask) {
            (Some(b), Some(a)) => if a.0 < b.0 { a } else { b },
            (Some(b), None) => b,
            (None, Some(a)) => a,
            (None, None) => return None,
        };
        match side {
            Side::Bid => self.bids.remove_id(price, id),
            Side::Ask => self.asks.remove_id(price, id),
        }
        Some(Order { id, side, price })
    }

    /// All resting orders: bids then asks, each in ascending price and then
    /// arrival order.
    pub fn orders(&self) -> impl Iterator<Item = Order> + '_ {
        let bids = self.bids.iter().map(|(price, id)| Order { id, side: Side::Bid, price });
        let asks = self.asks.iter().map(|(price, id)| Order { id, side: Side::Ask, price });
        bids.chain(asks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn book_from(orders: &[(Side, Price)]) -> (OrderBook, OrderId) {
        let mut book = OrderBook::new();
        let mut id = 0;
        for &(side, price) in orders {
            id += 1;
            assert_eq!(book.insert_limit(side, price, id).unwrap(), MatchOutcome::Rested);
        }
        (book, id)
    }

    #[test]
    fn bid_through_two_asks_trades_at_resting_price() {
        let (mut book, id) = book_from(&[(Side::Ask, 101), (Side::Ask, 101), (Side::Bid, 99)]);
        let out = book.insert_limit(Side::Bid, 102, id + 1).unwrap();
        assert_eq!(out, MatchOutcome::Traded { price: 101, resting_id: 1 });
        assert_eq!(book.ask_count(), 1);
        assert_eq!(book.best_ask(), Some(101));
        assert_eq!(book.best_bid(), Some(99));
    }

    #[test]
    fn ask_into_empty_book_rests() {
        let mut book = OrderBook::new();
        assert_eq!(book.insert_limit(Side::Ask, 5, 1).unwrap(), MatchOutcome::Rested);
        assert_eq!(book.best_ask(), Some(5));
        assert_eq!(book.best_bid(), None);
    }

    #[test]
    fn fifo_within_price_level() {
        let (mut book, _) = book_from(&[(Side::Bid, 10), (Side::Bid, 10)]);
        let out = book.insert_limit(Side::Ask, 10, 3).unwrap();
        assert_eq!(out, MatchOutcome::Traded { price: 10, resting_id: 1 });
        let left: Vec<_> = book.orders().map(|o| o.id).collect();
        assert_eq!(left, vec![2]);
    }

    #[test]
    fn best_prices() {
        let book = OrderBook::new();
        assert_eq!(book.best_bid(), None);
        assert_eq!(book.best_ask(), None);
        let (book, _) = book_from(&[(Side::Bid, 3), (Side::Bid, 7)]);
        assert_eq!(book.best_bid(), Some(7));
        let (book, _) = book_from(&[(Side::Ask, 3), (Side::Ask, 7)]);
        assert_eq!(book.best_ask(), Some(3));
    }

    #[test]
    fn rejects_non_increasing_id() {
        let mut book = OrderBook::new();
        book.insert_limit(Side::Bid, 0, 5).unwrap();
        assert_eq!(
            book.insert_limit(Side::Bid, 1, 5),
            Err(BookError::NonIncreasingId { id: 5, last: 5 })
        );
        assert!(book.insert_limit(Side::Ask, 9, 4).is_err());
        assert_eq!(book.len(), 1);
    }

    #[test]
    fn expiry_keeps_boundary() {
        let (mut book, _) = book_from(&[(Side::Bid, -20), (Side::Bid, -15), (Side::Ask, 0), (Side::Ask, 16)]);
        assert!(book.has_out_of_range(0, 15));
        assert_eq!(book.expire_out_of_range(0, 15), 2);
        let prices: Vec<_> = book.orders().map(|o| o.price).collect();
        assert_eq!(prices, vec![-15, 0]);
        assert!(!book.has_out_of_range(0, 15));
        assert_eq!(book.expire_out_of_range(0, 15), 0);
    }

    #[test]
    fn expiry_after_base_jump_matches_filter() {
        let prices = [55, 60, 70, 84, 85, 86, 90, 99, 100, 115, 116];
        let orders: Vec<_> = prices
            .iter()
            .map(|&p| if p < 86 { (Side::Bid, p) } else { (Side::Ask, p) })
            .collect();
        let (mut book, _) = book_from(&orders);
        let expected: Vec<_> = prices.iter().copied().filter(|p| (p - 100).abs() <= 15).collect();
        let removed = book.expire_out_of_range(100, 15);
        assert_eq!(removed, prices.len() - expected.len());
        let mut got: Vec<_> = book.orders().map(|o| o.price).collect();
        got.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn expire_oldest_picks_smallest_id() {
        let (mut book, _) = book_from(&[(Side::Ask, 40), (Side::Bid, -30), (Side::Ask, 30), (Side::Bid, 0)]);
        let gone = book.expire_oldest_out_of_range(0, 15).unwrap();
        assert_eq!((gone.id, gone.side, gone.price), (1, Side::Ask, 40));
        assert_eq!(book.expire_oldest_out_of_range(0, 15).unwrap().id, 2);
        assert_eq!(book.expire_oldest_out_of_range(0, 15).unwrap().id, 3);
        assert_eq!(book.expire_oldest_out_of_range(0, 15), None);
        assert_eq!(book.len(), 1);
    }
}
