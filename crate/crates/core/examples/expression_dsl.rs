//! Parsing component expressions and differentiating them with dual numbers.

use setopt::expr::parse;

fn main() {
    // `i` is the index of the function f^i the expression belongs to
    let src = "x1*exp(x1) + sin(2*pi*(i-1)/50)";
    let expr = match parse(src, 1) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{e}");
            return;
        }
    };
    println!(
        "free variables: {:?}, uses i: {}",
        expr.free_variables(),
        expr.uses_parameter()
    );
    for i in [1, 10, 25] {
        let d = expr.eval_dual(&[2.3], i).expect("finite at 2.3");
        println!(
            "i = {i:>2}: value {:.6}, derivative {:.6}",
            d.value, d.grad[0]
        );
    }

    // errors carry a position
    if let Err(e) = parse("x1 + * 2", 1) {
        println!("parse error: {e}");
    }
    if let Err(e) = parse("log(x1)", 1).unwrap().eval(&[-1.0], 1) {
        println!("evaluation error: {e}");
    }
}
