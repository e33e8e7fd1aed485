use actions::{build_squat_jump, JumpParams};
use nlp_solver::{solve, NlpProblem, SolveOptions};
use ocp::transcribe;
use template_model::{build_centaur_template, TemplateParams};

fn main() {
    let template = TemplateParams::default();
    let model = build_centaur_template(&template).unwrap();
    let params = JumpParams::default();
    let p = build_squat_jump(&model, &template, &params).unwrap();
    let nlp = transcribe(p).unwrap();
    eprintln!("vars {} rows {}", nlp.num_vars(), nlp.num_constraints());
    let z0 = actions::jump_initial_guess(&nlp);
    let opts = SolveOptions {
        max_iter: 150,
        verbosity: 1,
        log_path: Some("/tmp/squat_log.csv".into()),
        ..SolveOptions::default()
    };
    let t = std::time::Instant::now();
    let sol = solve(&nlp, &z0, &opts).unwrap();
    eprintln!(
        "status {:?} iters {} kkt stat {:.3e} viol {:.3e} time {:.1}s obj {:.6}",
        sol.status,
        sol.iterations,
        sol.kkt.stationarity,
        sol.kkt.violation,
        t.elapsed().as_secs_f64(),
        nlp.objective(&sol.z),
    );
}
