use hydrolim::environment::gen_elliptic_random;
use hydrolim::environment::ConductanceLaw;
use hydrolim::hydro::effective_diffusivity;

fn main() -> hydrolim::Result<()> {
    let law: ConductanceLaw = "discrete:0.5,2".parse()?;
    println!("harmonic mean of the law: {:.4}", law.harmonic_mean());
    for n in [64, 256, 1024, 4096] {
        let a = effective_diffusivity(&gen_elliptic_random(1, n, &law, 7)?)?;
        println!("d=1 n={n:<5} A = {:.4}", a.matrix[0][0]);
    }
    for n in [16, 32, 64] {
        let a = effective_diffusivity(&gen_elliptic_random(2, n, &law, 7)?)?;
        let ev = a.eigenvalues();
        println!("d=2 n={n:<5} eigenvalues {:.4} {:.4}, residual {:.1e}", ev[0], ev[1], a.residual);
    }
    Ok(())
}
