//! Builds, inspects and serializes topologies.

use std::path::Path;

use compute_congestion::topology::{grid, load_from_file, parse_topology, CapacityProfile, NodeId};

fn main() -> compute_congestion::Result<()> {
    let g = grid(4, 4, &CapacityProfile::uniform(2.0, 2.0), (0, 0), (3, 3), 1.0)?;
    println!(
        "4x4 grid: {} routers, {} router links",
        g.router_count(),
        g.router_edge_count()
    );
    let client = g.clients()[0];
    let path: Vec<String> = g.path_to_server(client)?.iter().map(|n| n.to_string()).collect();
    println!("client {client} to server: {}", path.join(" -> "));

    // text round trip
    let (back, warnings) = parse_topology(&g.to_text())?;
    assert!(warnings.is_empty());
    println!("round trip keeps {} nodes", back.nodes().len());

    let isp = load_from_file(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/isp_backbone.topo"))?;
    let mut degrees: Vec<(usize, NodeId)> = isp
        .routers()
        .map(|n| Ok((isp.degree(n.id)?, n.id)))
        .collect::<compute_congestion::Result<_>>()?;
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    println!(
        "backbone: {} routers, {} links",
        isp.router_count(),
        isp.router_edge_count()
    );
    for (d, id) in degrees.iter().take(5) {
        println!(
            "  router {id}: degree {d}, {} hops from the server",
            isp.distance_to_server(*id)?
        );
    }
    Ok(())
}
