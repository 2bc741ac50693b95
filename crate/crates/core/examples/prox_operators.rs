//! The regularizer `mu ||x||_1 + indicator(x >= 0)` and its proximal map.

use stomo::Regularizer;

fn main() -> stomo::Result<()> {
    let v = [0.5, -0.3, 0.1, 2.0];
    for reg in [
        Regularizer::l1_nonneg(0.2)?,
        Regularizer::L1 { mu: 0.2 },
        Regularizer::NonNeg,
        Regularizer::Zero,
    ] {
        let u = reg.prox(&v, 1.0)?;
        println!("{reg:?}: prox({v:?}) = {u:?}, R(prox) = {}", reg.eval(&u)?);
    }
    let reg = Regularizer::l1_nonneg(1.0)?;
    println!("R(1, -1e-9, 0) = {}", reg.eval(&[1.0, -1e-9, 0.0])?);
    Ok(())
}
