//! Random meadow samples, random expression trees and a straight-line
//! interpreter over `num_rational`, independent of the library evaluator.

use std::collections::BTreeMap;

use bitguilder_core::numerics::{Expr, Rat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;

pub fn sample_rat<R: Rng>(rng: &mut R) -> Rat {
    match rng.random_range(0..10) {
        0 => Rat::zero(),
        1 => Rat::from(rng.random_range(-3i64..=3)),
        2 => Rat::new(rng.random::<i64>(), rng.random_range(1i64..i64::MAX)),
        _ => Rat::new(rng.random_range(-1000i64..=1000), rng.random_range(-50i64..=50)),
    }
}

pub fn normalized(x: &Rat) -> bool {
    x.denom() > &BigInt::zero() && x.numer().gcd(x.denom()) == BigInt::from(1)
}

/// Every meadow law on `n` seeded triples; the first failure is returned.
pub fn check_meadow_laws<R: Rng>(rng: &mut R, n: usize) -> Result<(), String> {
    let zero = Rat::zero();
    let one = Rat::one();
    if zero.inverse() != zero {
        return Err("0⁻¹ ≠ 0".into());
    }
    for i in 0..n {
        let (x, y, z) = (sample_rat(rng), sample_rat(rng), sample_rat(rng));
        let laws = [
            ("x+y = y+x", &x + &y == &y + &x),
            ("(x+y)+z = x+(y+z)", &(&x + &y) + &z == &x + &(&y + &z)),
            ("x·y = y·x", &x * &y == &y * &x),
            ("(x·y)·z = x·(y·z)", &(&x * &y) * &z == &x * &(&y * &z)),
            ("x·(y+z) = x·y+x·z", &x * &(&y + &z) == &(&x * &y) + &(&x * &z)),
            ("x+0 = x", &x + &zero == x),
            ("x·1 = x", &x * &one == x),
            ("x+(-x) = 0", &x + &(-&x) == zero),
            ("(x⁻¹)⁻¹ = x", x.inverse().inverse() == x),
            ("(x·y)⁻¹ = x⁻¹·y⁻¹", (&x * &y).inverse() == &x.inverse() * &y.inverse()),
            ("x·(x·x⁻¹) = x", &x * &(&x * &x.inverse()) == x),
            ("x/y = x·y⁻¹", x.meadow_div(&y) == &x * &y.inverse()),
            ("normalized", [&x + &y, &x * &y, x.inverse(), &x - &z].iter().all(normalized)),
        ];
        if let Some((name, _)) = laws.iter().find(|(_, ok)| !ok) {
            return Err(format!("sample {i}: {name} fails for x={x}, y={y}, z={z}"));
        }
    }
    Ok(())
}

pub const VARS: [&str; 4] = ["a", "b", "price_1", "Q"];

/// A tree of depth at most `depth` with non-negative integer constants,
/// so that printing and reparsing is exact.
pub fn gen_expr<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    if depth == 0 || rng.random_range(0..4) == 0 {
        return if rng.random::<bool>() {
            Expr::int(rng.random_range(0..20))
        } else {
            Expr::var(VARS[rng.random_range(0..VARS.len())])
        };
    }
    let op = rng.random_range(0..6);
    let mut sub = || Box::new(gen_expr(rng, depth - 1));
    match op {
        0 => Expr::Neg(sub()),
        1 => Expr::Inv(sub()),
        2 => Expr::Add(sub(), sub()),
        3 => Expr::Sub(sub(), sub()),
        4 => Expr::Mul(sub(), sub()),
        _ => Expr::Div(sub(), sub()),
    }
}

enum Op {
    Push(BigRational),
    Load(String),
    Neg,
    Inv,
    Add,
    Sub,
    Mul,
    Div,
}

fn compile(e: &Expr, out: &mut Vec<Op>) {
    match e {
        Expr::Const(r) => out.push(Op::Push(BigRational::new(r.numer().clone(), r.denom().clone()))),
        Expr::Var(v) => out.push(Op::Load(v.clone())),
        Expr::Neg(a) | Expr::Inv(a) => {
            compile(a, out);
            out.push(if matches!(e, Expr::Neg(_)) { Op::Neg } else { Op::Inv });
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            compile(a, out);
            compile(b, out);
            out.push(match e {
                Expr::Add(..) => Op::Add,
                Expr::Sub(..) => Op::Sub,
                Expr::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
    }
}

fn total_inv(x: &BigRational) -> BigRational {
    if x.is_zero() {
        BigRational::zero()
    } else {
        x.recip()
    }
}

/// Evaluates `e` as a postfix program on a value stack.
pub fn straight_line_eval(e: &Expr, env: &BTreeMap<String, BigRational>) -> BigRational {
    let mut prog = Vec::new();
    compile(e, &mut prog);
    let mut stack: Vec<BigRational> = Vec::new();
    for op in prog {
        let v = match op {
            Op::Push(c) => c,
            Op::Load(name) => env[&name].clone(),
            Op::Neg => -stack.pop().unwrap(),
            Op::Inv => total_inv(&stack.pop().unwrap()),
            bin => {
                let b = stack.pop().unwrap();
                let a = stack.pop().unwrap();
                match bin {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    _ => a * total_inv(&b),
                }
            }
        };
        stack.push(v);
    }
    assert_eq!(stack.len(), 1);
    stack.pop().unwrap()
}

pub fn to_big(x: &Rat) -> BigRational {
    BigRational::new(x.numer().clone(), x.denom().clone())
}

pub fn is_negative(x: &BigRational) -> bool {
    x.is_negative()
}
