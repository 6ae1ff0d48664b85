//! Trains briefly, exports one agent's Q-table to the plain-text format, and
//! reads it back. Keys are the discretized state tuple, values one Q per
//! action.

use signalgrid::agents::QTable;
use signalgrid::config::preset;
use signalgrid::runner::run_single;

fn main() {
    let mut config = preset("observability-partial").unwrap().remove(0);
    config.horizon_s = 8_000;
    let scenario = config.build().unwrap();
    let out = run_single(&scenario, config.base_seed);

    let q = &out.qtables[5];
    let path = std::env::temp_dir().join("signalgrid-agent05.qtable.txt");
    q.write_text(std::fs::File::create(&path).unwrap()).unwrap();
    println!("wrote {} states to {}", q.len(), path.display());

    let restored = QTable::read_text(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(restored.len(), q.len());
    println!("read back {} states, identical: {}", restored.len(), restored.iter_sorted() == q.iter_sorted());

    // the states the agent cares most about
    let mut rows = q.iter_sorted();
    rows.sort_by(|a, b| {
        let m = |v: &[f64; 2]| v[0].abs().max(v[1].abs());
        m(b.1).partial_cmp(&m(a.1)).unwrap()
    });
    println!("\nphase elapsed queues      q_keep    q_change");
    for (state, values) in rows.iter().take(8) {
        let key = state.key_ints();
        println!(
            "  {}     {:2}     {:?}  {:9.3} {:9.3}",
            key[0],
            key[1],
            &key[2..],
            values[0],
            values[1]
        );
    }
}
