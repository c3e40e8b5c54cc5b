use std::ops::AddAssign;

/// Cost of a single device operation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OpCost {
    pub write_cycles: u64,
    pub compute_cycles: u64,
    pub words_written: u64,
    pub write_j: f64,
    pub static_j: f64,
}

impl OpCost {
    pub fn total_j(&self) -> f64 {
        self.write_j + self.static_j
    }
}

/// Running totals of everything an array has been charged.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyLedger {
    pub write_j: f64,
    pub static_j: f64,
    pub compute_cycles: u64,
    pub write_cycles: u64,
    pub words_written: u64,
}

impl EnergyLedger {
    pub fn charge(&mut self, cost: &OpCost) {
        self.write_j += cost.write_j;
        self.static_j += cost.static_j;
        self.compute_cycles += cost.compute_cycles;
        self.write_cycles += cost.write_cycles;
        self.words_written += cost.words_written;
    }

    pub fn total_j(&self) -> f64 {
        self.write_j + self.static_j
    }

    /// `component,joules,cycles` rows (header included).
    pub fn csv_rows(&self) -> Vec<[String; 3]> {
        vec![
            ["component".into(), "joules".into(), "cycles".into()],
            [
                "write".into(),
                self.write_j.to_string(),
                self.write_cycles.to_string(),
            ],
            [
                "static".into(),
                self.static_j.to_string(),
                self.compute_cycles.to_string(),
            ],
            [
                "total".into(),
                self.total_j().to_string(),
                (self.write_cycles + self.compute_cycles).to_string(),
            ],
        ]
    }
}

impl AddAssign<&OpCost> for EnergyLedger {
    fn add_assign(&mut self, rhs: &OpCost) {
        self.charge(rhs);
    }
}

impl AddAssign<&EnergyLedger> for EnergyLedger {
    fn add_assign(&mut self, rhs: &EnergyLedger) {
        self.write_j += rhs.write_j;
        self.static_j += rhs.static_j;
        self.compute_cycles += rhs.compute_cycles;
        self.write_cycles += rhs.write_cycles;
        self.words_written += rhs.words_written;
    }
}
