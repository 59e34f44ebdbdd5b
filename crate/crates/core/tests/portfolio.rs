use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use flocksat::dimacs::{parse_str, to_dimacs_string, verify_model};
use flocksat::generators::{pigeonhole, random_3sat_threshold};
use flocksat::orchestrator::{run_local, SolverFactory};
use flocksat::solver::{CoreSolver, LearnedClauseSink, SolverError};
use flocksat::transport::{TcpRendezvous, TcpTransport};
use flocksat::{oracle, start_node, CdclSolver, Clause, Formula, Lit, NodeOutcome, ProcessConfig, SatResult, Status};

fn config(processes: usize, solvers: usize) -> ProcessConfig {
    ProcessConfig {
        process_count: processes,
        solvers_per_process: solvers,
        round_interval: Duration::from_millis(5),
        ..ProcessConfig::default()
    }
}

fn over_tcp(formula: Formula, processes: usize) -> Vec<NodeOutcome> {
    let formula = Arc::new(formula);
    let rv = TcpRendezvous::bind("127.0.0.1:0").unwrap();
    let addr = rv.local_addr().unwrap();
    let leaves: Vec<_> = (1..processes)
        .map(|rank| {
            let cfg = ProcessConfig { rank, ..config(processes, 2) };
            let f = formula.clone();
            thread::spawn(move || {
                let mut t = TcpTransport::connect(addr, cfg.hello(), Duration::from_secs(10)).unwrap();
                start_node(cfg, f, &mut t).unwrap()
            })
        })
        .collect();
    let cfg = config(processes, 2);
    let mut root = rv.accept(cfg.hello()).unwrap();
    let mut outs = vec![start_node(cfg, formula, &mut root).unwrap()];
    outs.extend(leaves.into_iter().map(|h| h.join().unwrap()));
    outs
}

#[test]
fn tcp_portfolio_agrees_on_unsat() {
    let outs = over_tcp(pigeonhole(6, 5), 3);
    assert!(outs.iter().all(|o| o.status == Status::Unsat));
    let finder = outs[0].finder;
    assert!(finder.is_some());
    assert!(outs.iter().all(|o| o.finder == finder && o.model.is_none()));
}

#[test]
fn tcp_portfolio_model_stays_at_finder() {
    let f = random_3sat_threshold(60, 11);
    let want = {
        let s = CdclSolver::new();
        flocksat::solver::load_formula(&s, &f);
        s.solve().status()
    };
    let outs = over_tcp(f.clone(), 2);
    assert!(outs.iter().all(|o| o.status == want));
    if want == Status::Sat {
        let holders: Vec<&NodeOutcome> = outs.iter().filter(|o| o.model.is_some()).collect();
        assert_eq!(holders.len(), 1);
        assert_eq!(Some(holders[0].rank), holders[0].finder);
        assert!(verify_model(&f, holders[0].model.as_ref().unwrap()));
    }
}

#[test]
fn dimacs_to_verdict() {
    for seed in 0..20 {
        let text = to_dimacs_string(&random_3sat_threshold(18, seed));
        let f = Arc::new(parse_str(&text).unwrap().formula);
        let outs = run_local(&config(2, 2), f.clone(), None, None).unwrap();
        assert_eq!(outs[0].status, oracle::status(&f).unwrap());
        if let Some(m) = outs.iter().find_map(|o| o.model.as_ref()) {
            assert!(verify_model(&f, m));
        }
    }
}

/// A member that never answers; it only waits for its interrupt.
#[derive(Default)]
struct Idle {
    interrupted: AtomicBool,
}

impl CoreSolver for Idle {
    fn add_clause(&self, _clause: &[Lit]) -> Result<(), SolverError> {
        Ok(())
    }
    fn solve(&self) -> SatResult {
        while !self.interrupted.load(Ordering::Acquire) {
            thread::sleep(Duration::from_millis(1));
        }
        SatResult::Unknown
    }
    fn set_solver_interrupt(&self) {
        self.interrupted.store(true, Ordering::Release);
    }
    fn unset_solver_interrupt(&self) {
        self.interrupted.store(false, Ordering::Release);
    }
    fn set_phase(&self, _var: usize, _phase: bool) {}
    fn diversify(&self, _rank: usize, _size: usize) -> Result<(), SolverError> {
        Ok(())
    }
    fn add_learned_clause(&self, _clause: &Clause) {}
    fn set_learned_clause_callback(&self, _sink: Arc<dyn LearnedClauseSink>) {}
    fn increase_clause_production(&self) {}
}

#[test]
fn foreign_members_are_black_boxes() {
    let factory: SolverFactory = Arc::new(|global| -> Arc<dyn CoreSolver> {
        if global == 3 {
            Arc::new(CdclSolver::new())
        } else {
            Arc::new(Idle::default())
        }
    });
    let f = Arc::new(pigeonhole(5, 4));
    let outs = run_local(&config(2, 2), f, Some(factory), None).unwrap();
    assert!(outs.iter().all(|o| o.status == Status::Unsat && o.finder == Some(1)));
    assert_eq!(outs[1].local_solver, Some(1));
}
