//! Example programs and a seeded generator of small concurrent programs.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The stock server with two customers.
pub const STOCK: &str = "\
main() ->
    spawn(customer1, [self()]),
    spawn(customer2, [self()]),
    server(0).

server(N) ->
    receive
        {add,M} ->
            server(N+M);
        {del,M,C} when N>=M ->
            K = N-M, C ! K, server(K);
        stop ->
            ok
    end.

customer1(S) ->
    S ! {add,3},
    S ! {del,10,self()},
    receive
        N -> io:format(\"Stock: ~p~n\",[N])
    end,
    S ! stop.

customer2(S) ->
    S ! {add,5},
    S ! {add,1},
    S ! {add,4}.
";

pub const FACTORIAL: &str = "\
-module(fact).

fact(0) -> 1;
fact(N) when N>0 -> N * fact(N-1).
";

/// Three processes: two children report to the parent.
pub const THREE: &str = "\
main() ->
    P = self(),
    spawn(fun() -> P ! a end),
    spawn(fun() -> P ! b end),
    receive X -> receive Y -> {X,Y} end end.
";

/// A generated program and its entry point.
#[derive(Clone, Debug)]
pub struct Generated {
    pub seed: u64,
    pub source: String,
    pub entry: String,
}

/// A terminating program with one to three workers. Workers compute,
/// print, report values to `main`, and pass a message to the previously
/// spawned worker, which waits for it.
pub fn generate(seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let workers = rng.gen_range(1..=3usize);
    let mut src = String::new();
    let mut reports = 0usize;
    let mut bodies = Vec::new();
    for i in 1..=workers {
        let has_next = i < workers;
        let (body, sent) = worker_body(&mut rng, i, i > 1, has_next);
        reports += sent;
        bodies.push(body);
    }
    src.push_str("main() ->\n    Me = self(),\n");
    for i in 1..=workers {
        let peer = if i > 1 { format!("W{}", i - 1) } else { "none".to_string() };
        if rng.gen_bool(0.5) {
            let _ = writeln!(src, "    W{i} = spawn(worker{i}, [Me, {peer}]),");
        } else {
            let _ = writeln!(src, "    W{i} = spawn(fun() -> worker{i}(Me, {peer}) end),");
        }
    }
    let _ = writeln!(src, "    collect({reports}, 0).\n");
    src.push_str(
        "collect(0, Acc) -> Acc;\n\
         collect(K, Acc) ->\n    receive\n        {v, I, V} when I > 0 -> collect(K - 1, Acc + V);\n        {tag, _T} -> collect(K - 1, Acc)\n    end.\n\n",
    );
    for b in bodies {
        src.push_str(&b);
        src.push('\n');
    }
    Generated {
        seed,
        source: src,
        entry: "main".to_string(),
    }
}

fn worker_body(rng: &mut ChaCha8Rng, i: usize, has_peer: bool, waits: bool) -> (String, usize) {
    let mut lines = Vec::new();
    let mut vars: Vec<String> = Vec::new();
    let mut sent = 0;
    let n = rng.gen_range(1..=4);
    for k in 0..n {
        let x = format!("X{k}");
        let e = arith(rng, &vars);
        match rng.gen_range(0..6) {
            0 => lines.push(format!("{x} = case {e} rem 2 of 0 -> {e}; _ -> {e} + 1 end")),
            1 => lines.push(format!("{x} = if {e} > 3 -> {e} - 3; true -> {e} end")),
            2 => lines.push(format!("{x} = (fun(A) -> A * 2 end)({e})")),
            3 => lines.push(format!("{x} = lists_sum([{e}, {}])", rng.gen_range(0..5))),
            _ => lines.push(format!("{x} = {e}")),
        }
        vars.push(x.clone());
        match rng.gen_range(0..4) {
            0 | 1 => {
                lines.push(format!("Parent ! {{v, {i}, {x}}}"));
                sent += 1;
            }
            2 => lines.push(format!("io:format(\"w{i} ~p~n\", [{x}])")),
            _ => {}
        }
    }
    if rng.gen_bool(0.3) {
        lines.push(format!("Parent ! {{tag, w{i}}}"));
        sent += 1;
    }
    if has_peer {
        lines.push(format!("Peer ! {{peer, self(), {}}}", vars.last().unwrap()));
    }
    if waits {
        lines.push("receive {peer, From, Got} when is_pid(From) -> Got end".to_string());
    } else {
        lines.push("done".to_string());
    }
    let peer = if has_peer { "Peer" } else { "_Peer" };
    let mut s = format!("worker{i}(Parent, {peer}) ->\n");
    s.push_str(
        &lines
            .iter()
            .map(|l| format!("    {l}"))
            .collect::<Vec<_>>()
            .join(",\n"),
    );
    s.push_str(".\n");
    if i == 1 {
        s.push_str("\nlists_sum([]) -> 0;\nlists_sum([H|T]) -> H + lists_sum(T).\n");
    }
    (s, sent)
}

fn arith(rng: &mut ChaCha8Rng, vars: &[String]) -> String {
    let atom = |rng: &mut ChaCha8Rng| {
        if !vars.is_empty() && rng.gen_bool(0.6) {
            vars[rng.gen_range(0..vars.len())].clone()
        } else {
            rng.gen_range(0..10).to_string()
        }
    };
    let a = atom(rng);
    let b = atom(rng);
    let op = ["+", "-", "*"][rng.gen_range(0..3)];
    format!("{a} {op} {b}")
}
