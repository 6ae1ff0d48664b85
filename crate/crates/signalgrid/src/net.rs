//! Rectangular grid road network.
//!
//! Interior nodes are signalized intersections arranged in `rows x cols`.
//! Every interior row carries a one-way west-to-east arterial and every
//! interior column a one-way north-to-south arterial, so each intersection
//! has exactly one incoming and one outgoing link per axis. Boundary nodes
//! act as sources and sinks; routes run straight across the grid from one
//! boundary to the opposite one.

use thiserror::Error;

/// Default car length used for capacity, meters.
pub const DEFAULT_VEHICLE_LENGTH_M: f64 = 5.0;
/// Default standstill gap between queued cars, meters.
pub const DEFAULT_MIN_GAP_M: f64 = 2.5;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("grid must have at least one row and one column, got {rows}x{cols}")]
    EmptyGrid { rows: u32, cols: u32 },
    #[error("grid with {cols} columns exceeds the A..Z column labelling scheme")]
    TooWide { cols: u32 },
    #[error("link length must be positive, got {0}")]
    BadLinkLength(f64),
    #[error("links need at least one lane")]
    NoLanes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub u16);

impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Travel direction of a one-way link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    NorthSouth,
    WestEast,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: NodeId,
    /// Column letter plus row number, e.g. the north-west interior node of a
    /// 4x4 grid is "B2".
    pub label: String,
    /// 0 = north boundary row; interior rows start at 1.
    pub row: u32,
    /// 0 = west boundary column; interior columns start at 1.
    pub col: u32,
    pub signalized: bool,
}

#[derive(Clone, Debug)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
    pub lanes: u8,
    pub axis: Axis,
}

impl Link {
    /// Vehicles one lane can hold bumper-to-bumper at the default spacing.
    pub fn lane_capacity(&self) -> u32 {
        (self.length_m / (DEFAULT_VEHICLE_LENGTH_M + DEFAULT_MIN_GAP_M)).floor() as u32
    }

    pub fn capacity(&self) -> u32 {
        self.lane_capacity() * self.lanes as u32
    }
}

/// One green phase of an intersection: the set of lane movements it serves.
#[derive(Clone, Debug)]
pub struct Phase {
    pub served_axis: Axis,
    /// (incoming link, lane) pairs released during this phase.
    pub movements: Vec<(LinkId, u8)>,
}

#[derive(Clone, Debug)]
pub struct Intersection {
    pub node: NodeId,
    /// Phase 0 serves north-south, phase 1 west-east.
    pub phases: Vec<Phase>,
    /// All incoming links, both axes.
    pub incoming: Vec<LinkId>,
}

impl Intersection {
    /// Total vehicle capacity of the movements in one phase.
    pub fn phase_capacity(&self, net: &GridNetwork, phase: usize) -> u32 {
        self.phases[phase]
            .movements
            .iter()
            .map(|&(link, _)| net.link(link).lane_capacity())
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RouteId(pub u16);

/// A straight boundary-to-boundary path, e.g. "A2F2".
#[derive(Clone, Debug)]
pub struct Route {
    pub id: RouteId,
    pub name: String,
    pub axis: Axis,
    /// Links in travel order.
    pub links: Vec<LinkId>,
}

#[derive(Clone, Debug)]
pub struct GridNetwork {
    pub rows: u32,
    pub cols: u32,
    pub link_length_m: f64,
    pub lanes: u8,
    nodes: Vec<Node>,
    links: Vec<Link>,
    routes: Vec<Route>,
    intersections: Vec<Intersection>,
    /// node index -> intersection index, for signal lookup at link ends.
    node_intersection: Vec<Option<u16>>,
}

fn col_letter(col: u32) -> char {
    (b'A' + col as u8) as char
}

fn node_label(row: u32, col: u32) -> String {
    format!("{}{}", col_letter(col), row + 1)
}

/// Builds a `rows x cols` grid of signalized intersections with one-way
/// arterials: west-to-east along every interior row, north-to-south along
/// every interior column.
pub fn build_grid(rows: u32, cols: u32, link_length_m: f64, lanes: u8) -> Result<GridNetwork, NetError> {
    if rows == 0 || cols == 0 {
        return Err(NetError::EmptyGrid { rows, cols });
    }
    if cols + 2 > 26 {
        return Err(NetError::TooWide { cols });
    }
    if !(link_length_m > 0.0) {
        return Err(NetError::BadLinkLength(link_length_m));
    }
    if lanes == 0 {
        return Err(NetError::NoLanes);
    }

    let mut nodes = Vec::new();
    let mut node_at = vec![vec![None::<NodeId>; (cols + 2) as usize]; (rows + 2) as usize];
    let add_node = |nodes: &mut Vec<Node>, row: u32, col: u32, signalized: bool| {
        let id = NodeId(nodes.len() as u16);
        nodes.push(Node {
            id,
            label: node_label(row, col),
            row,
            col,
            signalized,
        });
        id
    };

    for row in 1..=rows {
        for col in 1..=cols {
            node_at[row as usize][col as usize] = Some(add_node(&mut nodes, row, col, true));
        }
    }
    for row in 1..=rows {
        node_at[row as usize][0] = Some(add_node(&mut nodes, row, 0, false));
        node_at[row as usize][(cols + 1) as usize] = Some(add_node(&mut nodes, row, cols + 1, false));
    }
    for col in 1..=cols {
        node_at[0][col as usize] = Some(add_node(&mut nodes, 0, col, false));
        node_at[(rows + 1) as usize][col as usize] = Some(add_node(&mut nodes, rows + 1, col, false));
    }

    let grab = |row: u32, col: u32| node_at[row as usize][col as usize].expect("node exists");

    let mut links = Vec::new();
    let add_link = |links: &mut Vec<Link>, from: NodeId, to: NodeId, axis: Axis| {
        let id = LinkId(links.len() as u16);
        links.push(Link {
            id,
            from,
            to,
            length_m: link_length_m,
            lanes,
            axis,
        });
        id
    };

    let mut routes = Vec::new();
    for row in 1..=rows {
        let mut path = Vec::new();
        for col in 0..=cols {
            path.push(add_link(&mut links, grab(row, col), grab(row, col + 1), Axis::WestEast));
        }
        let name = format!("{}{}", node_label(row, 0), node_label(row, cols + 1));
        routes.push(Route {
            id: RouteId(routes.len() as u16),
            name,
            axis: Axis::WestEast,
            links: path,
        });
    }
    for col in 1..=cols {
        let mut path = Vec::new();
        for row in 0..=rows {
            path.push(add_link(&mut links, grab(row, col), grab(row + 1, col), Axis::NorthSouth));
        }
        let name = format!("{}{}", node_label(0, col), node_label(rows + 1, col));
        routes.push(Route {
            id: RouteId(routes.len() as u16),
            name,
            axis: Axis::NorthSouth,
            links: path,
        });
    }

    let mut node_intersection = vec![None; nodes.len()];
    let mut intersections = Vec::new();
    for row in 1..=rows {
        for col in 1..=cols {
            let node = grab(row, col);
            let incoming: Vec<LinkId> = links
                .iter()
                .filter(|l| l.to == node)
                .map(|l| l.id)
                .collect();
            let movements_on = |axis: Axis| -> Vec<(LinkId, u8)> {
                incoming
                    .iter()
                    .filter(|&&l| links[l.index()].axis == axis)
                    .flat_map(|&l| (0..lanes).map(move |lane| (l, lane)))
                    .collect()
            };
            node_intersection[node.0 as usize] = Some(intersections.len() as u16);
            intersections.push(Intersection {
                node,
                phases: vec![
                    Phase {
                        served_axis: Axis::NorthSouth,
                        movements: movements_on(Axis::NorthSouth),
                    },
                    Phase {
                        served_axis: Axis::WestEast,
                        movements: movements_on(Axis::WestEast),
                    },
                ],
                incoming,
            });
        }
    }

    Ok(GridNetwork {
        rows,
        cols,
        link_length_m,
        lanes,
        nodes,
        links,
        routes,
        intersections,
        node_intersection,
    })
}

impl GridNetwork {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn intersections(&self) -> &[Intersection] {
        &self.intersections
    }

    /// Intersection controlling the given node, if it is signalized.
    pub fn intersection_at(&self, node: NodeId) -> Option<usize> {
        self.node_intersection[node.0 as usize].map(|i| i as usize)
    }

    pub fn route_index_by_name(&self, name: &str) -> Option<usize> {
        self.routes.iter().position(|r| r.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_by_four_grid_shape() {
        let net = build_grid(4, 4, 150.0, 2).unwrap();
        assert_eq!(net.intersections().len(), 16);
        assert_eq!(net.routes().len(), 8);
        // rows*(cols+1) west-east links plus cols*(rows+1) north-south links
        assert_eq!(net.links().len(), 40);
        let names: Vec<&str> = net.routes().iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["A2F2", "A3F3", "A4F4", "A5F5", "B1B6", "C1C6", "D1D6", "E1E6"]);
    }

    #[test]
    fn link_count_matches_independent_enumeration() {
        for rows in 1..=4u32 {
            for cols in 1..=4u32 {
                let net = build_grid(rows, cols, 100.0, 1).unwrap();
                // count edges of the abstract lattice directly
                let mut expected = 0;
                for _row in 1..=rows {
                    expected += cols + 1;
                }
                for _col in 1..=cols {
                    expected += rows + 1;
                }
                assert_eq!(net.links().len() as u32, expected, "{rows}x{cols}");
                assert_eq!(net.routes().len() as u32, rows + cols);
                assert_eq!(net.intersections().len() as u32, rows * cols);
            }
        }
    }

    #[test]
    fn single_intersection_grid() {
        let net = build_grid(1, 1, 150.0, 2).unwrap();
        assert_eq!(net.intersections().len(), 1);
        assert_eq!(net.routes().len(), 2);
        assert_eq!(net.routes()[0].links.len(), 2);
        assert_eq!(net.routes()[1].links.len(), 2);
    }

    #[test]
    fn rectangular_grid_routes() {
        let net = build_grid(2, 3, 100.0, 1).unwrap();
        assert_eq!(net.intersections().len(), 6);
        assert_eq!(net.routes().len(), 5);
        for route in net.routes() {
            let expected = match route.axis {
                Axis::WestEast => net.cols + 1,
                Axis::NorthSouth => net.rows + 1,
            };
            assert_eq!(route.links.len() as u32, expected, "{}", route.name);
        }
    }

    #[test]
    fn routes_chain_head_to_tail() {
        let net = build_grid(3, 4, 120.0, 2).unwrap();
        for route in net.routes() {
            for pair in route.links.windows(2) {
                assert_eq!(net.link(pair[0]).to, net.link(pair[1]).from);
                assert_eq!(net.link(pair[0]).axis, route.axis);
            }
        }
    }

    #[test]
    fn interior_nodes_have_one_incoming_link_per_axis() {
        let net = build_grid(4, 4, 150.0, 2).unwrap();
        for inter in net.intersections() {
            assert_eq!(inter.incoming.len(), 2);
            let ns = inter
                .incoming
                .iter()
                .filter(|&&l| net.link(l).axis == Axis::NorthSouth)
                .count();
            assert_eq!(ns, 1);
            assert_eq!(inter.phases.len(), 2);
            assert_eq!(inter.phases[0].served_axis, Axis::NorthSouth);
            assert_eq!(inter.phases[1].served_axis, Axis::WestEast);
        }
    }

    #[test]
    fn lane_capacity_floors_slot_count() {
        let mk = |length: f64| Link {
            id: LinkId(0),
            from: NodeId(0),
            to: NodeId(1),
            length_m: length,
            lanes: 2,
            axis: Axis::WestEast,
        };
        assert_eq!(mk(150.0).lane_capacity(), 20);
        assert_eq!(mk(7.5).lane_capacity(), 1);
        assert_eq!(mk(7.4).lane_capacity(), 0);
        assert_eq!(mk(150.0).capacity(), 40);
    }

    #[test]
    fn phase_capacity_sums_served_lanes() {
        let net = build_grid(4, 4, 150.0, 2).unwrap();
        let inter = &net.intersections()[0];
        assert_eq!(inter.phase_capacity(&net, 0), 40);
        assert_eq!(inter.phase_capacity(&net, 1), 40);
        assert_eq!(inter.phases[0].movements.len(), 2);
    }

    #[test]
    fn labels_follow_column_letter_row_number() {
        let net = build_grid(4, 4, 150.0, 2).unwrap();
        let first = &net.intersections()[0];
        let node = &net.nodes()[first.node.0 as usize];
        assert_eq!(node.label, "B2");
        assert!(net.nodes().iter().any(|n| n.label == "A2" && !n.signalized));
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert_eq!(build_grid(0, 3, 150.0, 2).unwrap_err(), NetError::EmptyGrid { rows: 0, cols: 3 });
        assert_eq!(build_grid(3, 0, 150.0, 2).unwrap_err(), NetError::EmptyGrid { rows: 3, cols: 0 });
        assert!(matches!(build_grid(2, 2, 0.0, 2), Err(NetError::BadLinkLength(_))));
        assert_eq!(build_grid(2, 2, 150.0, 0).unwrap_err(), NetError::NoLanes);
        assert_eq!(build_grid(2, 25, 150.0, 1).unwrap_err(), NetError::TooWide { cols: 25 });
    }
}
