//! Closed-form game analysis: expected utilities for the two-cloud and
//! single-cloud games, deterrence thresholds on the verification probability
//! alpha, and incentive-compatibility / individual-rationality checks.
//!
//! All payoffs are abstract currency, carried as f64.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Verifier error probabilities. `p_fp = 1 - p_tn`, `p_fn = 1 - p_tp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub p_tp: f64,
    pub p_tn: f64,
    pub p_fp: f64,
    pub p_fn: f64,
}

impl ErrorRates {
    /// Builds a consistent set from the two independent rates.
    pub fn from_tn_tp(p_tn: f64, p_tp: f64) -> Self {
        ErrorRates {
            p_tp,
            p_tn,
            p_fp: 1.0 - p_tn,
            p_fn: 1.0 - p_tp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_tp", self.p_tp),
            ("p_tn", self.p_tn),
            ("p_fp", self.p_fp),
            ("p_fn", self.p_fn),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if (self.p_fp - (1.0 - self.p_tn)).abs() > 1e-9 {
            return Err(Error::Config("p_fp must equal 1 - p_tn".into()));
        }
        if (self.p_fn - (1.0 - self.p_tp)).abs() > 1e-9 {
            return Err(Error::Config("p_fn must equal 1 - p_tp".into()));
        }
        Ok(())
    }
}

/// Which game is being analyzed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameForm {
    TwoCloud,
    SingleCloud,
}

/// All economic scalars of a game instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// P(Q): price paid per query.
    pub price: f64,
    /// C(Q): the server's cost to compute the query honestly.
    pub cost_honest: f64,
    /// C(Q'): the server's cost for its cheating computation.
    pub cost_cheat: f64,
    /// F: contractual fine.
    pub fine: f64,
    /// I_v(Q): the owner's value for the true result (positive).
    pub info_value_honest: f64,
    /// I_v(Q'): the owner's value for a bogus result (negative).
    pub info_value_cheat: f64,
    /// C(A): cost of an exact audit.
    pub audit_cost: f64,
    /// C(V): cost of one local sketch verification.
    pub verify_cost: f64,
    pub error_rates: ErrorRates,
    /// Probability of verification (single cloud) or duplication (two cloud).
    pub alpha: f64,
}

impl GameConfig {
    /// G = C(Q) - C(Q'): the server's gain from cheating.
    pub fn gain(&self) -> f64 {
        self.cost_honest - self.cost_cheat
    }

    pub fn validate(&self, form: GameForm) -> Result<()> {
        let c = |msg: String| Err(Error::Config(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return c(format!("alpha = {} outside [0, 1]", self.alpha));
        }
        if self.fine < 0.0 {
            return c(format!("fine = {} must be >= 0", self.fine));
        }
        if !(self.cost_cheat <= self.cost_honest && self.cost_honest <= self.price) {
            return c(format!(
                "need cost_cheat <= cost_honest <= price, got {} <= {} <= {}",
                self.cost_cheat, self.cost_honest, self.price
            ));
        }
        if !(self.info_value_cheat < 0.0 && 0.0 < self.info_value_honest) {
            return c(format!(
                "need info_value_cheat < 0 < info_value_honest, got {} and {}",
                self.info_value_cheat, self.info_value_honest
            ));
        }
        if self.audit_cost >= self.info_value_honest - self.info_value_cheat {
            return c(format!(
                "audit_cost = {} must be below info_value_honest - info_value_cheat = {}",
                self.audit_cost,
                self.info_value_honest - self.info_value_cheat
            ));
        }
        if self.verify_cost < 0.0 || self.audit_cost < 0.0 {
            return c("verify_cost and audit_cost must be >= 0".into());
        }
        match form {
            GameForm::TwoCloud => {
                if self.info_value_honest < (1.0 + self.alpha) * self.price {
                    return c(format!(
                        "two-cloud IR: info_value_honest = {} below (1 + alpha) * price = {}",
                        self.info_value_honest,
                        (1.0 + self.alpha) * self.price
                    ));
                }
            }
            GameForm::SingleCloud => {
                if self.info_value_honest < self.price {
                    return c(format!(
                        "single-cloud IR: info_value_honest = {} below price = {}",
                        self.info_value_honest, self.price
                    ));
                }
            }
        }
        self.error_rates.validate()
    }
}

/// Contract in force for the two-cloud game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoCloudContract {
    /// On mismatch, both servers pay F and return the payment.
    One,
    /// On mismatch, a show-work audit identifies cheaters; only they pay F.
    /// With `audit_reimbursed` the identified cheaters also repay the audit
    /// cost (the transfer-adjusted view); otherwise the owner absorbs it.
    Two { audit_reimbursed: bool },
}

/// Expected utilities for one action profile of the two-cloud game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileUtilities {
    pub owner: f64,
    pub s1: f64,
    pub s2: f64,
}

/// Full expected-utility table over {h,c} x {h,c}. Profile order is
/// (S1 action, S2 action).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCloudUtilities {
    pub hh: ProfileUtilities,
    pub hc: ProfileUtilities,
    pub ch: ProfileUtilities,
    pub cc: ProfileUtilities,
}

impl TwoCloudUtilities {
    pub fn profile(&self, s1_cheats: bool, s2_cheats: bool) -> &ProfileUtilities {
        match (s1_cheats, s2_cheats) {
            (false, false) => &self.hh,
            (false, true) => &self.hc,
            (true, false) => &self.ch,
            (true, true) => &self.cc,
        }
    }
}

/// Expected utilities for the two-cloud game under the given contract.
pub fn utilities_two_cloud(config: &GameConfig, contract: TwoCloudContract) -> Result<TwoCloudUtilities> {
    config.validate(GameForm::TwoCloud)?;
    let a = config.alpha;
    let p = config.price;
    let c = config.cost_honest;
    let cp = config.cost_cheat;
    let f = config.fine;
    let iv = config.info_value_honest;
    let ivp = config.info_value_cheat;
    let ca = config.audit_cost;

    let honest_pair = ProfileUtilities {
        owner: iv - (1.0 + a) * p,
        s1: 0.5 * (1.0 + a) * (p - c),
        s2: 0.5 * (1.0 + a) * (p - c),
    };

    match contract {
        TwoCloudContract::One => {
            // Caught branch: both fined F, payment returned, costs refunded.
            let owner_one_cheat =
                a * (2.0 * f + iv + ivp) + (1.0 - a) * (0.5 * (iv + ivp) - p);
            let honest_vs_cheat = 0.5 * (1.0 - a) * (p - c) - a * f;
            let cheat_any = 0.5 * (1.0 - a) * (p - cp) - a * f;
            Ok(TwoCloudUtilities {
                hh: honest_pair,
                hc: ProfileUtilities {
                    owner: owner_one_cheat,
                    s1: honest_vs_cheat,
                    s2: cheat_any,
                },
                ch: ProfileUtilities {
                    owner: owner_one_cheat,
                    s1: cheat_any,
                    s2: honest_vs_cheat,
                },
                cc: ProfileUtilities {
                    owner: a * (2.0 * f + 2.0 * ivp) + (1.0 - a) * (ivp - p),
                    s1: cheat_any,
                    s2: cheat_any,
                },
            })
        }
        TwoCloudContract::Two { audit_reimbursed } => {
            // Identified cheaters pay F; honest servers pay nothing and net
            // zero in the audited branch. The owner spends C(A) on the audit,
            // reimbursed by the cheaters when the transfer is in force.
            let owner_audit_net = if audit_reimbursed { 0.0 } else { -ca };
            let cheater_extra = |n_cheaters: f64| {
                if audit_reimbursed {
                    ca / n_cheaters
                } else {
                    0.0
                }
            };
            let owner_one_cheat =
                a * (f + iv + ivp + owner_audit_net) + (1.0 - a) * (0.5 * (iv + ivp) - p);
            let honest_vs_cheat = 0.5 * (1.0 - a) * (p - c);
            let cheat_vs_honest = 0.5 * (1.0 - a) * (p - cp) - a * (f + cheater_extra(1.0));
            let cheat_vs_cheat = 0.5 * (1.0 - a) * (p - cp) - a * (f + cheater_extra(2.0));
            Ok(TwoCloudUtilities {
                hh: honest_pair,
                hc: ProfileUtilities {
                    owner: owner_one_cheat,
                    s1: honest_vs_cheat,
                    s2: cheat_vs_honest,
                },
                ch: ProfileUtilities {
                    owner: owner_one_cheat,
                    s1: cheat_vs_honest,
                    s2: honest_vs_cheat,
                },
                cc: ProfileUtilities {
                    owner: a * (2.0 * f + 2.0 * ivp + owner_audit_net) + (1.0 - a) * (ivp - p),
                    s1: cheat_vs_cheat,
                    s2: cheat_vs_cheat,
                },
            })
        }
    }
}

/// Smallest duplication probability deterring a cheat worth `gain`:
/// `G / (2F + 2P + G)`. Negative gain means no incentive to cheat, so 0.
pub fn alpha_threshold_two_cloud(gain: f64, fine: f64, price: f64) -> Result<f64> {
    if fine + price <= 0.0 {
        return Err(Error::Parameter("fine + price must be positive".into()));
    }
    if gain < 0.0 {
        return Ok(0.0);
    }
    Ok(gain / (2.0 * fine + 2.0 * price + gain))
}

/// Exact indifference point implied by the utility table:
/// u_S1(h,h) = u_S1(c,h) at `G / (2F + 2P - C - C')`. The closed form
/// `alpha_threshold_two_cloud` simplifies the same inequality to
/// `G / (2F + 2P + G)`, which is smaller whenever C + C' > -G; a
/// best-responding server flips at this value, not at the closed form.
pub fn alpha_equalizer_two_cloud(config: &GameConfig) -> Result<f64> {
    let denom =
        2.0 * config.fine + 2.0 * config.price - config.cost_honest - config.cost_cheat;
    if denom <= 0.0 {
        return Err(Error::Parameter(
            "equalizer denominator must be positive".into(),
        ));
    }
    Ok((config.gain() / denom).max(0.0))
}

/// Practical alpha when the owner does not know G, only G <= P.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PracticalAlpha {
    /// Self-consistent substitution G = P into the threshold: P / (2F + 3P).
    pub consistent: f64,
    /// The printed simplification P / (2F - P); anti-conservative for small
    /// F and not implied by the substitution. Exposed for comparison only.
    pub printed: f64,
}

/// Both candidate practical alphas; `consistent` is the one to use.
pub fn alpha_practical_two_cloud(price: f64, fine: f64) -> Result<PracticalAlpha> {
    if fine <= 0.0 {
        return Err(Error::Parameter("fine must be positive".into()));
    }
    Ok(PracticalAlpha {
        consistent: alpha_threshold_two_cloud(price, fine, price)?,
        printed: if 2.0 * fine > price {
            price / (2.0 * fine - price)
        } else {
            1.0
        },
    })
}

/// Owner/server expected utilities at one decision point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairUtilities {
    pub owner: f64,
    pub server: f64,
}

/// Single-cloud expected utilities under the audit-reimbursement contract,
/// both per verification branch and composed at the configured alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleCloudUtilities {
    pub not_verified_honest: PairUtilities,
    pub not_verified_cheat: PairUtilities,
    pub verified_honest: PairUtilities,
    pub verified_cheat: PairUtilities,
    pub at_alpha_honest: PairUtilities,
    pub at_alpha_cheat: PairUtilities,
}

/// Expected utilities for the single-cloud game. A caught cheater pays
/// F + C(A) (the fine plus the audit-cost reimbursement) and forfeits the
/// payment; the owner absorbs the audit cost of a false escalation.
pub fn utilities_single_cloud(config: &GameConfig) -> Result<SingleCloudUtilities> {
    config.validate(GameForm::SingleCloud)?;
    let a = config.alpha;
    let p = config.price;
    let c = config.cost_honest;
    let cp = config.cost_cheat;
    let f = config.fine;
    let iv = config.info_value_honest;
    let ivp = config.info_value_cheat;
    let ca = config.audit_cost;
    let cv = config.verify_cost;
    let r = &config.error_rates;

    let not_verified_honest = PairUtilities {
        owner: iv - p,
        server: p - c,
    };
    let not_verified_cheat = PairUtilities {
        owner: ivp - p,
        server: p - cp,
    };
    let verified_honest = PairUtilities {
        owner: iv - p - cv - r.p_fn * ca,
        server: p - c,
    };
    // Caught cheats reimburse the audit and pay the fine to the owner, so the
    // owner's audit outlay cancels and +p_tn * F remains.
    let verified_cheat = PairUtilities {
        owner: ivp - cv + r.p_tn * f - r.p_fp * p,
        server: r.p_fp * p - cp - r.p_tn * (ca + f),
    };
    let mix = |v: PairUtilities, n: PairUtilities| PairUtilities {
        owner: a * v.owner + (1.0 - a) * n.owner,
        server: a * v.server + (1.0 - a) * n.server,
    };
    Ok(SingleCloudUtilities {
        not_verified_honest,
        not_verified_cheat,
        verified_honest,
        verified_cheat,
        at_alpha_honest: mix(verified_honest, not_verified_honest),
        at_alpha_cheat: mix(verified_cheat, not_verified_cheat),
    })
}

/// Smallest verification probability deterring the single-cloud cheat:
/// `(C(Q) - C(Q')) / (p_tn * (C(A) + F + P))`. Values above 1 mean the fine
/// is too small to deter at any alpha <= 1.
pub fn alpha_threshold_single_cloud(config: &GameConfig) -> Result<f64> {
    if config.error_rates.p_tn <= 0.0 {
        return Err(Error::Undeterrable);
    }
    let denom = config.error_rates.p_tn * (config.audit_cost + config.fine + config.price);
    if denom <= 0.0 {
        return Err(Error::Parameter("threshold denominator must be positive".into()));
    }
    Ok((config.gain().max(0.0)) / denom)
}

/// One inequality in the rationality report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RationalityCheck {
    pub name: String,
    pub pass: bool,
    /// Slack of the inequality; zero means it binds exactly.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RationalityReport {
    pub form: GameForm,
    pub checks: Vec<RationalityCheck>,
    pub all_pass: bool,
}

/// Lists each IR/IC inequality with pass/fail and margin.
pub fn check_rationality(config: &GameConfig, form: GameForm) -> Result<RationalityReport> {
    let mut checks = Vec::new();
    let mut push = |name: &str, margin: f64| {
        checks.push(RationalityCheck {
            name: name.to_string(),
            pass: margin >= 0.0,
            margin,
        });
    };
    push("price_covers_cost", config.price - config.cost_honest);
    match form {
        GameForm::TwoCloud => {
            push(
                "owner_ir_info_value_covers_expected_payment",
                config.info_value_honest - (1.0 + config.alpha) * config.price,
            );
            let threshold =
                alpha_threshold_two_cloud(config.gain(), config.fine, config.price)?;
            push("ic_alpha_at_least_threshold", config.alpha - threshold);
            // equilibrium (h,h) utilities; skip table validation so the
            // report can still be produced for out-of-IR configs
            let owner_eq = config.info_value_honest - (1.0 + config.alpha) * config.price;
            let server_eq = 0.5 * (1.0 + config.alpha) * (config.price - config.cost_honest);
            push("owner_equilibrium_utility_nonnegative", owner_eq);
            push("server_equilibrium_utility_nonnegative", server_eq);
        }
        GameForm::SingleCloud => {
            push(
                "owner_ir_info_value_covers_price",
                config.info_value_honest - config.price,
            );
            let threshold = alpha_threshold_single_cloud(config)?;
            push("ic_alpha_at_least_threshold", config.alpha - threshold);
            push("threshold_feasible", 1.0 - threshold);
            let owner_eq = config.alpha
                * (config.info_value_honest
                    - config.price
                    - config.verify_cost
                    - config.error_rates.p_fn * config.audit_cost)
                + (1.0 - config.alpha) * (config.info_value_honest - config.price);
            let server_eq = config.price - config.cost_honest;
            push("owner_equilibrium_utility_nonnegative", owner_eq);
            push("server_equilibrium_utility_nonnegative", server_eq);
        }
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(RationalityReport { form, checks, all_pass })
}

/// A best-responding server's action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Honest,
    Cheat,
}

/// Best response for a two-cloud server assuming its opponent is honest.
/// Ties break honest.
pub fn best_response_two_cloud(config: &GameConfig, contract: TwoCloudContract) -> Result<Action> {
    let table = utilities_two_cloud(config, contract)?;
    if table.ch.s1 > table.hh.s1 {
        Ok(Action::Cheat)
    } else {
        Ok(Action::Honest)
    }
}

/// Best response for the single-cloud server at the configured alpha.
pub fn best_response_single_cloud(config: &GameConfig) -> Result<Action> {
    let table = utilities_single_cloud(config)?;
    if table.at_alpha_cheat.server > table.at_alpha_honest.server {
        Ok(Action::Cheat)
    } else {
        Ok(Action::Honest)
    }
}

/// Draws a random configuration satisfying every invariant of the given
/// game form, for property tests and Monte-Carlo equivalence sweeps.
pub fn random_valid_config<R: Rng + ?Sized>(rng: &mut R, form: GameForm) -> GameConfig {
    let price: f64 = rng.random_range(5.0..50.0);
    let cost_honest: f64 = rng.random_range(0.2..1.0) * price;
    let cost_cheat: f64 = rng.random_range(0.0..1.0) * cost_honest;
    let fine: f64 = rng.random_range(10.0..500.0);
    let alpha: f64 = rng.random_range(0.0..1.0);
    let info_value_honest: f64 =
        (1.0 + alpha) * price + rng.random_range(1.0..100.0);
    let info_value_cheat: f64 = -rng.random_range(1.0..30.0);
    let max_audit = info_value_honest - info_value_cheat;
    let audit_cost: f64 = rng.random_range(0.05..0.8) * max_audit;
    let verify_cost: f64 = rng.random_range(0.0..0.2) * price;
    let p_tn: f64 = rng.random_range(0.5..1.0);
    let p_tp: f64 = rng.random_range(0.5..1.0);
    let config = GameConfig {
        price,
        cost_honest,
        cost_cheat,
        fine,
        info_value_honest,
        info_value_cheat,
        audit_cost,
        verify_cost,
        error_rates: ErrorRates::from_tn_tp(p_tn, p_tp),
        alpha,
    };
    debug_assert!(config.validate(form).is_ok());
    config
}
