//! Straight-line re-implementation of the forwarding rules, written against
//! plain vectors and linear scans. It shares no code with the engine beyond
//! the `Assignment` enum, so agreement between the two is meaningful.

use skyflow::Assignment;
use skyflow::Assignment::{Da2gc, Dropped, Inactive, Sa2gc};

#[derive(Debug, Clone)]
pub struct RefFlow {
    pub priority: u8,
    pub delay_req: u8,
    pub pinned: bool,
    pub arrival: Option<u64>,
    pub drops: u32,
    pub at: Assignment,
    pub rate: u64,
}

#[derive(Debug, Clone)]
pub struct Reference {
    weights: (f64, f64, f64),
    pub flows: Vec<RefFlow>,
    pub cap_d: u64,
    pub cap_s: u64,
    next_arrival: u64,
    pub log: Vec<(usize, Assignment, Assignment)>,
}

impl Reference {
    /// `scheme` is 1, 2 or 3; flows are `(priority, delay_req, pinned)`.
    pub fn new(scheme: u8, flows: &[(u8, u8, bool)], cap_d: u64, cap_s: u64) -> Self {
        let weights = match scheme {
            1 => (1.0, 0.0, 0.0),
            2 => (0.5, 0.5, 0.0),
            3 => (0.5, 0.25, 0.25),
            _ => panic!("no scheme {scheme}"),
        };
        Reference {
            weights,
            flows: flows
                .iter()
                .map(|&(priority, delay_req, pinned)| RefFlow {
                    priority,
                    delay_req,
                    pinned,
                    arrival: None,
                    drops: 0,
                    at: Inactive,
                    rate: 0,
                })
                .collect(),
            cap_d,
            cap_s,
            next_arrival: 0,
            log: Vec::new(),
        }
    }

    pub fn fsv(&self, i: usize) -> f64 {
        let f = &self.flows[i];
        let (a, b, c) = self.weights;
        a * f.priority as f64 + b * f.delay_req as f64 + c * f.drops as f64
    }

    fn load(&self, at: Assignment) -> u64 {
        self.flows.iter().filter(|f| f.at == at).map(|f| f.rate).sum()
    }

    fn free(&self, at: Assignment) -> i64 {
        let cap = if at == Da2gc { self.cap_d } else { self.cap_s };
        cap as i64 - self.load(at) as i64
    }

    fn fits(&self, rate: u64, at: Assignment) -> bool {
        rate as i64 <= self.free(at)
    }

    /// Lowest FSV; among equals, the latest arrival.
    fn lowest(&self, pred: impl Fn(&RefFlow) -> bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in 0..self.flows.len() {
            if !pred(&self.flows[i]) {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let (fi, fb) = (self.fsv(i), self.fsv(b));
                    if fi < fb || (fi == fb && self.flows[i].arrival > self.flows[b].arrival) {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    /// Highest FSV; among equals, the earliest arrival.
    fn highest(&self, pred: impl Fn(&RefFlow) -> bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in 0..self.flows.len() {
            if !pred(&self.flows[i]) {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let (fi, fb) = (self.fsv(i), self.fsv(b));
                    if fi > fb || (fi == fb && self.flows[i].arrival < self.flows[b].arrival) {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    fn set(&mut self, i: usize, to: Assignment) {
        let from = self.flows[i].at;
        self.flows[i].at = to;
        self.log.push((i, from, to));
    }

    fn drop(&mut self, i: usize) {
        self.flows[i].drops += 1;
        self.set(i, Dropped);
    }

    pub fn incoming(&mut self, i: usize, rate: u64) {
        assert_eq!(self.flows[i].at, Inactive);
        if self.flows[i].arrival.is_none() {
            self.flows[i].arrival = Some(self.next_arrival);
            self.next_arrival += 1;
        }
        self.flows[i].rate = rate;
        let own = self.fsv(i);
        // Offload strictly lower-FSV flows until the newcomer fits.
        while !self.fits(rate, Da2gc) {
            let Some(v) = self.lowest(|f| f.at == Da2gc && !f.pinned) else {
                break;
            };
            if self.fsv(v) >= own {
                break;
            }
            self.onto_sa2gc(v);
        }
        if self.fits(rate, Da2gc) {
            self.set(i, Da2gc);
        } else if self.flows[i].pinned {
            self.drop(i);
        } else {
            self.onto_sa2gc(i);
        }
    }

    fn onto_sa2gc(&mut self, i: usize) {
        let rate = self.flows[i].rate;
        if self.fits(rate, Sa2gc) {
            self.set(i, Sa2gc);
            return;
        }
        let own = self.fsv(i);
        let mut lower = 0u64;
        for j in 0..self.flows.len() {
            if self.flows[j].at == Sa2gc && self.fsv(j) < own {
                lower += self.flows[j].rate;
            }
        }
        if self.free(Sa2gc) + (lower as i64) < rate as i64 {
            self.drop(i);
            return;
        }
        while !self.fits(rate, Sa2gc) {
            let v = self.lowest(|f| f.at == Sa2gc).unwrap();
            self.drop(v);
        }
        self.set(i, Sa2gc);
    }

    fn shed_d(&mut self) {
        while self.load(Da2gc) > self.cap_d {
            let v = match self.lowest(|f| f.at == Da2gc && !f.pinned) {
                Some(v) => v,
                None => {
                    let p = self.lowest(|f| f.at == Da2gc).unwrap();
                    self.drop(p);
                    continue;
                }
            };
            let rate = self.flows[v].rate;
            if rate > self.cap_s {
                self.drop(v);
                continue;
            }
            while !self.fits(rate, Sa2gc) {
                let w = self.lowest(|f| f.at == Sa2gc).unwrap();
                self.drop(w);
            }
            self.set(v, Sa2gc);
        }
    }

    fn shed_s(&mut self) {
        while self.load(Sa2gc) > self.cap_s {
            let v = self.lowest(|f| f.at == Sa2gc).unwrap();
            self.drop(v);
        }
    }

    fn settle(&mut self) {
        loop {
            while let Some(p) = self.highest(|f| f.at == Dropped && f.pinned) {
                if !self.fits(self.flows[p].rate, Da2gc) {
                    break;
                }
                self.set(p, Da2gc);
            }
            while let Some(t) = self.highest(|f| f.at == Sa2gc) {
                if !self.fits(self.flows[t].rate, Da2gc) {
                    break;
                }
                self.set(t, Da2gc);
            }
            let mut any = false;
            while let Some(t) = self.highest(|f| f.at == Dropped && !f.pinned) {
                if !self.fits(self.flows[t].rate, Sa2gc) {
                    break;
                }
                self.set(t, Sa2gc);
                any = true;
            }
            if !any {
                return;
            }
        }
    }

    pub fn capacity(&mut self, da2gc: bool, cap: u64) {
        let old = if da2gc {
            std::mem::replace(&mut self.cap_d, cap)
        } else {
            std::mem::replace(&mut self.cap_s, cap)
        };
        if cap > old {
            self.settle();
        } else if cap < old {
            if da2gc {
                self.shed_d();
            } else {
                self.shed_s();
            }
        }
    }

    pub fn rate_change(&mut self, i: usize, rate: u64) {
        let old = self.flows[i].rate;
        if old == rate {
            return;
        }
        self.flows[i].rate = rate;
        match self.flows[i].at {
            Da2gc if rate > old => self.shed_d(),
            Sa2gc if rate > old => self.shed_s(),
            Da2gc | Sa2gc => self.settle(),
            _ => {}
        }
    }

    pub fn release(&mut self, i: usize) {
        let from = self.flows[i].at;
        if from == Inactive {
            return;
        }
        self.set(i, Inactive);
        self.flows[i].rate = 0;
        if from == Da2gc || from == Sa2gc {
            self.settle();
        }
    }
}
