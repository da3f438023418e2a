use poctl::formula::{to_pnf, Cmp, Formula};
use poctl::rat::{rat, fmt_rat};
use poctl::tableau::{build_tableau, DecideConfig};

fn main() {
    let a = Formula::atom("a");
    let b = Formula::atom("b");
    let formulas = vec![
        Formula::ne(Cmp::Gt, rat(1, 2), Formula::next(a.clone())),
        to_pnf(&Formula::not(Formula::po(Cmp::Ge, rat(1, 3), Formula::until(a.clone(), b.clone())))).unwrap(),
        Formula::and(
            Formula::po(Cmp::Gt, rat(1, 4), Formula::next(b.clone())),
            Formula::ne(Cmp::Ge, rat(3, 4), Formula::next(a.clone())),
        ),
    ];
    for (k, f) in formulas.iter().enumerate() {
        let tab = build_tableau(f, &DecideConfig::default()).unwrap();
        'outer: for s in 0..tab.node_count() {
            for t in 0..tab.node_count() {
                let d = tab.d_set(s, t);
                let maxd = *d.last().unwrap();
                for v in tab.ev_set.values() {
                    if *v <= maxd && !d.contains(v) {
                        println!("formula {}: pair ({}, {}) gap at {} max {}", k, s, t, fmt_rat(*v), fmt_rat(maxd));
                        println!("  s label: {:?}", tab.label_formulas(s).iter().map(|x| x.to_string()).collect::<Vec<_>>());
                        println!("  t label: {:?}", tab.label_formulas(t).iter().map(|x| x.to_string()).collect::<Vec<_>>());
                        println!("  D = {:?}", d.iter().map(|x| fmt_rat(*x)).collect::<Vec<_>>());
                        println!("  edge = {}", fmt_rat(tab.edge(s, t)));
                        break 'outer;
                    }
                }
            }
        }
    }
}
