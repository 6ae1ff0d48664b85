//! Builds the default 4x4 grid and walks its pieces: nodes, links, routes,
//! and the two-phase signal definition at each intersection.

use signalgrid::net::{build_grid, Axis};

fn main() {
    let net = build_grid(4, 4, 150.0, 2).unwrap();

    let signalized = net.nodes().iter().filter(|n| n.signalized).count();
    println!(
        "grid: {} nodes ({} signalized), {} links, {} routes",
        net.nodes().len(),
        signalized,
        net.links().len(),
        net.routes().len()
    );

    for route in net.routes() {
        let dir = match route.axis {
            Axis::WestEast => "W->E",
            Axis::NorthSouth => "N->S",
        };
        println!("route {:5} {} via {} links", route.name, dir, route.links.len());
    }

    // every interior node carries one signal with an NS and a WE phase
    let b2 = net.nodes().iter().find(|n| n.label == "B2").unwrap().id;
    let inter = &net.intersections()[net.intersection_at(b2).unwrap()];
    println!("\nintersection B2:");
    for (i, phase) in inter.phases.iter().enumerate() {
        let movements: Vec<String> = phase
            .movements
            .iter()
            .map(|(link, lane)| {
                let l = net.link(*link);
                let from = &net.nodes()[l.from.0 as usize].label;
                format!("{}->B2 lane {}", from, lane)
            })
            .collect();
        println!(
            "  phase {i} serves {:?}: {} (capacity {})",
            phase.served_axis,
            movements.join(", "),
            inter.phase_capacity(&net, i)
        );
    }

    // link capacity follows from the 7.5 m vehicle slot
    let link = net.link(net.routes()[0].links[0]);
    println!(
        "\nlink {}m x {} lanes: {} vehicles per lane, {} total",
        link.length_m,
        link.lanes,
        link.lane_capacity(),
        link.capacity()
    );
}
