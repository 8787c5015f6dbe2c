use hydrolim::environment::{gen_sierpinski, write_environment};
use hydrolim::operator::{assemble_generator, dirichlet_form, project_test_function};
use hydrolim::testfn::TestFunction;

fn main() -> hydrolim::Result<()> {
    let g = TestFunction::Cosine { k: 1, axis: 0 };
    println!("level  sites  edges  rate      E_m(cos)");
    for m in 1..=6 {
        let env = gen_sierpinski(m)?;
        let gen = assemble_generator(&env);
        let f = project_test_function(&env, |p| g.value(p));
        println!(
            "{m:>5}  {:>5}  {:>5}  {:<8}  {:.5}",
            env.site_count(),
            env.edges().len(),
            env.edges()[0].rate,
            dirichlet_form(&gen, &f)
        );
    }
    let mut out = Vec::new();
    write_environment(&gen_sierpinski(1)?, &mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
