//! Network description and observation encoding.
//!
//! A topology is declared in a TOML config: hosts grouped into subnets, one
//! switch per subnet, one central router, and three kinds of links (switch
//! trunks to the router, host access links to their switch, and direct
//! host-to-host routes). [`load_config`] validates the declaration and builds
//! the derived link table used everywhere else.
//!
//! The observation both agents see is a flat `0.0`/`1.0` vector produced by
//! [`encode`]: one slot per host in id order (1 means clean), then one slot
//! per link in declaration order, trunks first, then access links, then
//! routes (1 means active). Under the bundled default config that is
//! 32 + 4 + 32 + 12 = 80 slots.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::TopologyError;

/// Config schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

const DEFAULT_CONFIG_TOML: &str = include_str!("../configs/default.toml");

/// What a link connects. Determines its endpoints' node kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Switch `a` to the central router.
    Trunk,
    /// Host `a` to its subnet switch `b`.
    HostAccess,
    /// Host `a` directly to host `b`.
    Route,
}

/// One link in observation-slot order. Endpoint meaning depends on `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub kind: LinkKind,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubnet {
    switch: usize,
    hosts: Vec<usize>,
}

/// Serde mirror of the config file; turned into a [`TopologyConfig`] by
/// validation.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    host_count: usize,
    s_max: i64,
    critical_server: usize,
    backup_hosts: Vec<usize>,
    initially_compromised: Vec<usize>,
    trunk_links: Vec<(usize, usize)>,
    host_links: Vec<(usize, usize)>,
    route_links: Vec<(usize, usize)>,
    subnets: Vec<RawSubnet>,
}

/// A validated network declaration plus derived lookup tables.
///
/// Immutable after construction; share it behind `Arc` across as many game
/// sessions as needed.
#[derive(Debug, Clone)]
pub struct TopologyConfig {
    host_count: usize,
    switch_count: usize,
    subnets: Vec<(usize, Vec<usize>)>,
    critical_server: usize,
    backup_hosts: Vec<usize>,
    initially_compromised: BTreeSet<usize>,
    s_max: i64,
    /// All links in observation-slot order: trunks, host access, routes.
    links: Vec<Link>,
    /// Endpoints of each link as node ids (see `node_*` helpers).
    link_nodes: Vec<(usize, usize)>,
    /// Incident link indices per node id.
    node_incident: Vec<Vec<usize>>,
    /// Subnet switch of each host.
    host_switch: Vec<usize>,
}

impl TopologyConfig {
    /// The bundled default network: 32 hosts, 4 subnets (6/8/9/9), 48 links.
    pub fn default_config() -> TopologyConfig {
        from_toml_str(DEFAULT_CONFIG_TOML)
            .expect("bundled default topology config is valid (covered by unit test)")
    }

    /// The bundled default config as TOML text, suitable for writing out.
    pub fn default_config_toml() -> &'static str {
        DEFAULT_CONFIG_TOML
    }

    pub fn host_count(&self) -> usize {
        self.host_count
    }

    pub fn switch_count(&self) -> usize {
        self.switch_count
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Length of the encoded observation: one slot per host plus one per link.
    pub fn observation_len(&self) -> usize {
        self.host_count + self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Subnets as (switch id, hosts), ordered by switch id.
    pub fn subnets(&self) -> &[(usize, Vec<usize>)] {
        &self.subnets
    }

    pub fn critical_server(&self) -> usize {
        self.critical_server
    }

    /// Migration targets in slot order; always exactly 3 under validation.
    pub fn backup_hosts(&self) -> &[usize] {
        &self.backup_hosts
    }

    pub fn initially_compromised(&self) -> &BTreeSet<usize> {
        &self.initially_compromised
    }

    pub fn s_max(&self) -> i64 {
        self.s_max
    }

    pub fn host_switch(&self, host: usize) -> usize {
        self.host_switch[host]
    }

    /// Link indices incident to `host`: its access link plus any routes.
    ///
    /// These are exactly the links an isolate or reconnect action toggles.
    pub fn host_links(&self, host: usize) -> &[usize] {
        &self.node_incident[host]
    }

    fn check_state_shape(&self, state: &NetworkState) -> Result<(), TopologyError> {
        if state.compromised.len() != self.host_count {
            return Err(TopologyError::StateShape(format!(
                "state has {} host bits, config has {} hosts",
                state.compromised.len(),
                self.host_count
            )));
        }
        if state.link_active.len() != self.links.len() {
            return Err(TopologyError::StateShape(format!(
                "state has {} link bits, config has {} links",
                state.link_active.len(),
                self.links.len()
            )));
        }
        if state.server_at >= self.host_count {
            return Err(TopologyError::StateShape(format!(
                "server_at {} out of host range {}",
                state.server_at, self.host_count
            )));
        }
        Ok(())
    }
}

/// Mutable per-game network condition: which hosts are compromised, which
/// links are up, where the critical server currently lives, and which hosts
/// carry an attacker flag.
///
/// Owned by exactly one game session; the shape must match the session's
/// config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkState {
    compromised: Vec<bool>,
    link_active: Vec<bool>,
    server_at: usize,
    flags: BTreeSet<usize>,
}

impl NetworkState {
    /// Fresh state: the configured initial compromises (each carrying a
    /// flag), every link active, server on the critical host.
    pub fn initial(cfg: &TopologyConfig) -> NetworkState {
        let mut compromised = vec![false; cfg.host_count()];
        for &h in cfg.initially_compromised() {
            compromised[h] = true;
        }
        NetworkState {
            compromised,
            link_active: vec![true; cfg.link_count()],
            server_at: cfg.critical_server(),
            flags: cfg.initially_compromised().clone(),
        }
    }

    pub fn is_compromised(&self, host: usize) -> bool {
        self.compromised[host]
    }

    pub fn set_compromised(&mut self, host: usize, value: bool) {
        self.compromised[host] = value;
    }

    pub fn compromised_count(&self) -> usize {
        self.compromised.iter().filter(|&&c| c).count()
    }

    pub fn compromised_hosts(&self) -> impl Iterator<Item = usize> + '_ {
        self.compromised
            .iter()
            .enumerate()
            .filter_map(|(h, &c)| c.then_some(h))
    }

    pub fn link_active(&self, link: usize) -> bool {
        self.link_active[link]
    }

    pub fn set_link_active(&mut self, link: usize, value: bool) {
        self.link_active[link] = value;
    }

    /// Toggle every link incident to `host` (access plus routes) at once.
    pub fn set_host_links(&mut self, cfg: &TopologyConfig, host: usize, active: bool) {
        for &li in cfg.host_links(host) {
            self.link_active[li] = active;
        }
    }

    pub fn server_at(&self) -> usize {
        self.server_at
    }

    pub fn set_server_at(&mut self, host: usize) {
        self.server_at = host;
    }

    pub fn flags(&self) -> &BTreeSet<usize> {
        &self.flags
    }

    pub fn set_flag(&mut self, host: usize) {
        self.flags.insert(host);
    }

    pub fn clear_flag(&mut self, host: usize) {
        self.flags.remove(&host);
    }
}

/// Read and validate a topology config file.
pub fn load_config(path: &Path) -> Result<TopologyConfig, TopologyError> {
    let text = std::fs::read_to_string(path)?;
    from_toml_str(&text)
}

/// Parse and validate a topology config from TOML text.
pub fn from_toml_str(text: &str) -> Result<TopologyConfig, TopologyError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<TopologyConfig, TopologyError> {
    if raw.schema_version != SCHEMA_VERSION {
        return Err(TopologyError::SchemaVersion {
            found: raw.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let host_count = raw.host_count;
    if host_count == 0 {
        return Err(TopologyError::SubnetShape("config declares zero hosts".into()));
    }

    // Subnets: switch ids contiguous from 0, hosts partition 0..host_count.
    let mut subnets = raw.subnets.clone();
    subnets.sort_by_key(|s| s.switch);
    let switch_count = subnets.len();
    if switch_count == 0 {
        return Err(TopologyError::SubnetShape("no subnets declared".into()));
    }
    let mut host_switch = vec![usize::MAX; host_count];
    for (want, subnet) in subnets.iter().enumerate() {
        if subnet.switch != want {
            return Err(TopologyError::SubnetShape(format!(
                "switch ids must be contiguous from 0; found {} where {} expected",
                subnet.switch, want
            )));
        }
        if subnet.hosts.is_empty() {
            return Err(TopologyError::SubnetShape(format!(
                "subnet of switch {} has no hosts",
                subnet.switch
            )));
        }
        for &h in &subnet.hosts {
            if h >= host_count {
                return Err(TopologyError::SubnetShape(format!(
                    "host {h} out of range {host_count}"
                )));
            }
            if host_switch[h] != usize::MAX {
                return Err(TopologyError::SubnetShape(format!(
                    "host {h} listed in more than one subnet"
                )));
            }
            host_switch[h] = subnet.switch;
        }
    }
    if let Some(h) = host_switch.iter().position(|&s| s == usize::MAX) {
        return Err(TopologyError::SubnetShape(format!(
            "host {h} belongs to no subnet"
        )));
    }

    // Trunks: exactly one per switch, router id always 0 (single router).
    let mut trunk_of_switch = vec![None; switch_count];
    for &(s, r) in &raw.trunk_links {
        if s >= switch_count {
            return Err(TopologyError::LinkEndpoint(format!(
                "trunk link ({s}, {r}): switch {s} out of range {switch_count}"
            )));
        }
        if r != 0 {
            return Err(TopologyError::LinkEndpoint(format!(
                "trunk link ({s}, {r}): router id must be 0"
            )));
        }
        if trunk_of_switch[s].is_some() {
            return Err(TopologyError::DuplicateLink(format!("trunk for switch {s}")));
        }
        trunk_of_switch[s] = Some(());
    }
    if let Some(s) = trunk_of_switch.iter().position(|t| t.is_none()) {
        return Err(TopologyError::MissingTrunkLink(s));
    }

    // Access links: exactly one per host, pointing at its subnet switch.
    let mut access_of_host = vec![None; host_count];
    for &(h, s) in &raw.host_links {
        if h >= host_count {
            return Err(TopologyError::LinkEndpoint(format!(
                "host link ({h}, {s}): host {h} out of range {host_count}"
            )));
        }
        if s != host_switch[h] {
            return Err(TopologyError::LinkEndpoint(format!(
                "host link ({h}, {s}): host {h} belongs to switch {}",
                host_switch[h]
            )));
        }
        if access_of_host[h].is_some() {
            return Err(TopologyError::DuplicateLink(format!("access link for host {h}")));
        }
        access_of_host[h] = Some(());
    }
    if let Some(h) = access_of_host.iter().position(|a| a.is_none()) {
        return Err(TopologyError::MissingHostLink(h));
    }

    // Routes: distinct unordered host pairs, no self-loops.
    let mut seen_routes = BTreeSet::new();
    for &(a, b) in &raw.route_links {
        if a >= host_count || b >= host_count {
            return Err(TopologyError::LinkEndpoint(format!(
                "route link ({a}, {b}): host out of range {host_count}"
            )));
        }
        if a == b {
            return Err(TopologyError::LinkEndpoint(format!(
                "route link ({a}, {b}): self-loop"
            )));
        }
        if !seen_routes.insert((a.min(b), a.max(b))) {
            return Err(TopologyError::DuplicateLink(format!("route ({a}, {b})")));
        }
    }

    if raw.critical_server >= host_count {
        return Err(TopologyError::CriticalServerRange(raw.critical_server));
    }

    if raw.backup_hosts.len() != 3 {
        return Err(TopologyError::BackupHosts(format!(
            "expected exactly 3 migration targets, got {}",
            raw.backup_hosts.len()
        )));
    }
    let mut seen_backups = BTreeSet::new();
    for &b in &raw.backup_hosts {
        if b >= host_count {
            return Err(TopologyError::BackupHosts(format!(
                "backup host {b} out of range {host_count}"
            )));
        }
        if b == raw.critical_server {
            return Err(TopologyError::BackupHosts(format!(
                "backup host {b} is the critical server"
            )));
        }
        if !seen_backups.insert(b) {
            return Err(TopologyError::BackupHosts(format!("backup host {b} repeated")));
        }
    }

    if raw.initially_compromised.is_empty() {
        return Err(TopologyError::InitiallyCompromised(
            "set must be non-empty".into(),
        ));
    }
    let mut initially_compromised = BTreeSet::new();
    for &h in &raw.initially_compromised {
        if h >= host_count {
            return Err(TopologyError::InitiallyCompromised(format!(
                "host {h} out of range {host_count}"
            )));
        }
        if h == raw.critical_server {
            return Err(TopologyError::InitiallyCompromised(format!(
                "host {h} is the critical server"
            )));
        }
        initially_compromised.insert(h);
    }

    if raw.s_max != host_count as i64 {
        return Err(TopologyError::SMax {
            expected: host_count as i64,
            found: raw.s_max,
        });
    }

    // Derived link table in observation-slot order: trunks, access, routes.
    let mut links = Vec::with_capacity(
        raw.trunk_links.len() + raw.host_links.len() + raw.route_links.len(),
    );
    for &(s, _) in &raw.trunk_links {
        links.push(Link { kind: LinkKind::Trunk, a: s, b: 0 });
    }
    for &(h, s) in &raw.host_links {
        links.push(Link { kind: LinkKind::HostAccess, a: h, b: s });
    }
    for &(a, b) in &raw.route_links {
        links.push(Link { kind: LinkKind::Route, a, b });
    }

    // Node ids: hosts, then switches, then the router last.
    let switch_node = |s: usize| host_count + s;
    let router_node = host_count + switch_count;
    let mut link_nodes = Vec::with_capacity(links.len());
    let mut node_incident = vec![Vec::new(); host_count + switch_count + 1];
    for (li, link) in links.iter().enumerate() {
        let (na, nb) = match link.kind {
            LinkKind::Trunk => (switch_node(link.a), router_node),
            LinkKind::HostAccess => (link.a, switch_node(link.b)),
            LinkKind::Route => (link.a, link.b),
        };
        link_nodes.push((na, nb));
        node_incident[na].push(li);
        node_incident[nb].push(li);
    }

    Ok(TopologyConfig {
        host_count,
        switch_count,
        subnets: subnets.into_iter().map(|s| (s.switch, s.hosts)).collect(),
        critical_server: raw.critical_server,
        backup_hosts: raw.backup_hosts,
        initially_compromised,
        s_max: raw.s_max,
        links,
        link_nodes,
        node_incident,
        host_switch,
    })
}

/// Encode network state as the agents' observation vector.
///
/// Host slot `h` is 1.0 when host `h` is NOT compromised; link slot is 1.0
/// when the link is active. Output length is [`TopologyConfig::observation_len`].
pub fn encode(state: &NetworkState, cfg: &TopologyConfig) -> Result<Vec<f64>, TopologyError> {
    cfg.check_state_shape(state)?;
    let mut out = Vec::with_capacity(cfg.observation_len());
    for h in 0..cfg.host_count() {
        out.push(if state.is_compromised(h) { 0.0 } else { 1.0 });
    }
    for li in 0..cfg.link_count() {
        out.push(if state.link_active(li) { 1.0 } else { 0.0 });
    }
    Ok(out)
}

/// Hosts the attacker can reach next: every uncompromised host connected to a
/// compromised one through currently active links.
///
/// Traffic transits switches and the router freely; an uncompromised host is
/// a reachable endpoint but never forwards further. Empty means the attacker
/// is fully contained.
pub fn attack_frontier(
    state: &NetworkState,
    cfg: &TopologyConfig,
) -> Result<BTreeSet<usize>, TopologyError> {
    cfg.check_state_shape(state)?;
    let hosts = cfg.host_count();
    let mut visited = vec![false; hosts + cfg.switch_count() + 1];
    let mut frontier = BTreeSet::new();
    let mut queue = VecDeque::new();
    for h in state.compromised_hosts() {
        visited[h] = true;
        queue.push_back(h);
    }
    while let Some(node) = queue.pop_front() {
        for &li in &cfg.node_incident[node] {
            if !state.link_active(li) {
                continue;
            }
            let (na, nb) = cfg.link_nodes[li];
            let other = if na == node { nb } else { na };
            if visited[other] {
                continue;
            }
            visited[other] = true;
            if other < hosts {
                // Compromised hosts were all seeded, so this one is clean:
                // record it and stop; clean hosts do not forward.
                frontier.insert(other);
            } else {
                queue.push_back(other);
            }
        }
    }
    Ok(frontier)
}

/// Human-readable table of every observation slot, for `topo validate`.
pub fn describe_slots(cfg: &TopologyConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>4}  {:<12} meaning", "slot", "kind");
    for h in 0..cfg.host_count() {
        let mut notes = Vec::new();
        if h == cfg.critical_server() {
            notes.push("critical server".to_string());
        }
        if let Some(slot) = cfg.backup_hosts().iter().position(|&b| b == h) {
            notes.push(format!("backup slot {slot}"));
        }
        if cfg.initially_compromised().contains(&h) {
            notes.push("initially compromised".to_string());
        }
        let suffix = if notes.is_empty() {
            String::new()
        } else {
            format!(" [{}]", notes.join(", "))
        };
        let _ = writeln!(
            out,
            "{:>4}  {:<12} host {} on switch {} (1 = clean){}",
            h,
            "host",
            h,
            cfg.host_switch(h),
            suffix
        );
    }
    for (i, link) in cfg.links().iter().enumerate() {
        let slot = cfg.host_count() + i;
        let desc = match link.kind {
            LinkKind::Trunk => format!("switch {} <-> router (1 = active)", link.a),
            LinkKind::HostAccess => {
                format!("host {} <-> switch {} (1 = active)", link.a, link.b)
            }
            LinkKind::Route => format!("host {} <-> host {} (1 = active)", link.a, link.b),
        };
        let kind = match link.kind {
            LinkKind::Trunk => "link trunk",
            LinkKind::HostAccess => "link access",
            LinkKind::Route => "link route",
        };
        let _ = writeln!(out, "{slot:>4}  {kind:<12} {desc}");
    }
    out
}
