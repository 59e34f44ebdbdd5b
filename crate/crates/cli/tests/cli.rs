use std::io::Write;
use std::net::TcpListener;
use std::process::{Command, Output, Stdio};

use flocksat::dimacs::{parse_str, to_dimacs_string, verify_model};
use flocksat::generators::pigeonhole;
use flocksat::{Assignment, Formula};

fn run(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_flocksat"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn model_of(out: &str) -> Vec<i32> {
    let lits: Vec<i32> = out
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .flat_map(|l| l.split_whitespace().map(|t| t.parse::<i32>().unwrap()))
        .collect();
    assert_eq!(lits.last(), Some(&0), "v lines must end with 0");
    lits[..lits.len() - 1].to_vec()
}

#[test]
fn satisfiable_file() {
    let text = "c small\np cnf 3 2\n1 -2 0\n2 3 0\n";
    let o = run(&["-c", "2", "-i", "10", "-"], text);
    assert_eq!(o.status.code(), Some(10));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "s SATISFIABLE"));
    let bools: Vec<bool> = model_of(&out).iter().map(|&l| l > 0).collect();
    let f = parse_str(text).unwrap().formula;
    assert!(verify_model(&f, &Assignment::from_bools(&bools)));
}

#[test]
fn pigeonhole_is_unsat() {
    let o = run(&["-c", "2", "-i", "10"], &to_dimacs_string(&pigeonhole(4, 3)));
    assert_eq!(o.status.code(), Some(20));
    assert!(stdout(&o).lines().any(|l| l == "s UNSATISFIABLE"));
}

#[test]
fn tiny_time_limit_is_unknown() {
    let o = run(&["-c", "1", "-t", "0.001", "-i", "1"], &to_dimacs_string(&pigeonhole(12, 11)));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "s UNKNOWN"));
}

#[test]
fn tautology_only_input_is_sat() {
    let o = run(&["-c", "1", "-i", "5"], "c hi\np cnf 1 1\n1 -1 0\n");
    assert_eq!(o.status.code(), Some(10));
    assert!(stdout(&o).contains("c dropped 1 tautological clauses"));
}

#[test]
fn bad_flags_and_bad_input_fail() {
    let o = run(&["-d", "bogus"], "");
    assert_ne!(o.status.code(), Some(0));
    assert!(!o.stderr.is_empty());
    let o = run(&["-b", "4"], "p cnf 1 1\n1 0\n");
    assert_eq!(o.status.code(), Some(1));
    let o = run(&[], "p cnf 2 1\n1 0 extra\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("extra"));
}

#[test]
fn virtual_processes() {
    let f = Formula::from_raw(4, [vec![1, 2], vec![-1, 3], vec![-3, 4], vec![-2, -4]]).unwrap();
    let o = run(&["-p", "3", "-c", "1", "-i", "5", "-d", "sparse"], &to_dimacs_string(&f));
    assert_eq!(o.status.code(), Some(10));
    let bools: Vec<bool> = model_of(&stdout(&o)).iter().map(|&l| l > 0).collect();
    assert!(verify_model(&f, &Assignment::from_bools(&bools)));
}

#[test]
fn tcp_two_processes() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let text = to_dimacs_string(&pigeonhole(5, 4));
    let leaf = {
        let (addr, text) = (addr.clone(), text.clone());
        std::thread::spawn(move || {
            run(&["--connect", &addr, "--rank", "1", "-n", "2", "-c", "1", "-i", "10"], &text)
        })
    };
    let root = run(&["--listen", &addr, "-n", "2", "-c", "1", "-i", "10"], &text);
    let leaf = leaf.join().unwrap();
    assert_eq!(root.status.code(), Some(20), "{}", String::from_utf8_lossy(&root.stderr));
    assert_eq!(leaf.status.code(), Some(20), "{}", String::from_utf8_lossy(&leaf.stderr));
}
