use std::collections::{BTreeMap, HashMap, HashSet};
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use sha2::{Digest as _, Sha256};

use super::config::{Action, Latency, MiningMode, Role, ScenarioConfig};
use super::metrics::{AttackOutcome, ForkEpisode, Metrics, ServiceEvent, SupplySample, TxLatency};
use super::node::{Node, Sealed, TransferOrder, Wallet};
use super::queue::EventQueue;
use super::service::ParticipationService;
use super::NetsimError;
use crate::consensus::{detect_forks, ChainView, ChooseError, Decision, ForkRecord, ForkReport, ForkRule};
use crate::ledger::{assemble_block, select_transactions, Amount, Block, ChainParams, LedgerState, Nonce, TxId};
use crate::numerics::Rat;

const SOLVE_BUDGET: u64 = 1 << 40;

#[derive(Clone)]
enum Msg {
    Tx(Rc<Vec<u8>>),
    Block(Rc<Sealed>),
    Sync(Rc<Vec<Rc<Sealed>>>),
}

enum Payload {
    Mine { node: usize, gen: u64 },
    Deliver { to: usize, msg: Msg },
    Action(usize),
    Heal(u64),
}

#[derive(Debug, Clone)]
enum AttackKind {
    DoubleSpend { victim: usize, t1: TxId, t2: TxId, k_c: u64, give_up: u64, acted: Option<Rat> },
    Majority,
}

#[derive(Debug, Clone)]
struct Attack {
    kind: AttackKind,
    attacker: usize,
    fork_len: u64,
    started: Rat,
    released_len: u64,
    done: bool,
}

#[derive(Debug)]
struct ServiceState {
    node: usize,
    ledger: ParticipationService,
    deposits: Vec<(TxId, String, Amount)>,
    /// Payments emitted but not yet in the service's chain.
    outflows: Vec<(TxId, Amount)>,
    insolvent: bool,
}

/// Final views, metrics and trace digest of a run.
#[derive(Debug)]
pub struct RunOutput {
    pub names: Vec<String>,
    pub views: Vec<ChainView>,
    pub metrics: Metrics,
    pub trace_digest: String,
    pub events: u64,
    pub end_time: Rat,
    pub seed: u64,
}

impl RunOutput {
    pub fn view(&self, name: &str) -> Option<&ChainView> {
        self.names.iter().position(|n| n == name).map(|i| &self.views[i])
    }
}

/// The event loop. Use [`run`](super::run) for a complete scenario, or
/// drive it step by step.
pub struct Sim {
    cfg: ScenarioConfig,
    pub params: ChainParams,
    pub rule: ForkRule,
    now: Rat,
    queue: EventQueue<Payload>,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
    trace: Sha256,
    events: u64,
    metrics: Metrics,
    partition: Option<(u64, Vec<usize>)>,
    partitions: u64,
    attacks: Vec<Attack>,
    services: BTreeMap<usize, ServiceState>,
    /// Puzzle attempts per tick of the whole network.
    hash_rate: f64,
    total_power: f64,
    latency_idx: HashMap<TxId, usize>,
    fork_open: Option<usize>,
    stopped: bool,
}

impl Sim {
    pub fn new(cfg: ScenarioConfig) -> Result<Sim, NetsimError> {
        let params = cfg.validate()?;
        let rule = cfg.consensus.rule();
        let mut nodes: Vec<Node> = cfg
            .participants
            .iter()
            .map(|p| Node {
                name: p.name.clone(),
                role: p.role,
                hash_power: p.hash_power,
                isolated_constructor: p.isolated_constructor,
                wallet: p.role.holds_keys().then(|| Wallet::for_name(params.signature, &p.name)),
                view: ChainView::new(params.clone()),
                known: HashMap::new(),
                orphans: Vec::new(),
                mempool: Vec::new(),
                mempool_ids: HashSet::new(),
                mine_gen: 0,
                template: None,
                public: None,
            })
            .collect();

        if cfg.setup.prefix_blocks > 0 {
            let miner = match &cfg.setup.prefix_miner {
                Some(n) => cfg.index_of(n).expect("validated"),
                None => nodes.iter().position(|n| n.role.mines()).expect("validated"),
            };
            let key = nodes[miner].wallet.as_ref().expect("validated").key().clone();
            let mut state = LedgerState::new();
            for _ in 0..cfg.setup.prefix_blocks {
                let b = assemble_block(&state, &params, &key, Vec::new(), Vec::new(), SOLVE_BUDGET)
                    .map_err(|e| NetsimError::Runtime(format!("prefix block: {e}")))?;
                state.apply_block_in_place(&b, &params).map_err(|e| NetsimError::Runtime(format!("prefix block: {e}")))?;
                let sealed = Rc::new(Sealed { digest: b.digest(params.hash), block: b });
                for n in &mut nodes {
                    n.view.extend(&sealed.block).expect("prefix is valid");
                    n.known.insert(sealed.digest.clone(), sealed.clone());
                }
            }
        }

        let mut services = BTreeMap::new();
        for (i, p) in cfg.participants.iter().enumerate() {
            if p.role == Role::ParticipationService {
                let users = cfg.participants.iter().filter(|u| u.service.as_deref() == Some(&p.name)).map(|u| u.name.clone());
                services.insert(
                    i,
                    ServiceState {
                        node: i,
                        ledger: ParticipationService::new(users),
                        deposits: Vec::new(),
                        outflows: Vec::new(),
                        insolvent: false,
                    },
                );
            }
        }

        let total_power = nodes.iter().map(|n| n.hash_power).sum();
        let hash_rate = params.difficulty as f64 / cfg.mining.block_interval;
        let mut sim = Sim {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed()),
            params,
            rule,
            now: Rat::zero(),
            queue: EventQueue::new(),
            nodes,
            trace: Sha256::new(),
            events: 0,
            metrics: Metrics::default(),
            partition: None,
            partitions: 0,
            attacks: Vec::new(),
            services,
            hash_rate,
            total_power,
            latency_idx: HashMap::new(),
            fork_open: None,
            stopped: false,
            cfg,
        };
        for (i, a) in sim.cfg.actions.iter().enumerate() {
            sim.queue.push(a.at().clone(), Payload::Action(i));
        }
        for i in 0..sim.nodes.len() {
            sim.restart_mining(i);
        }
        if sim.cfg.metrics.supply_samples {
            sim.sample_supply();
        }
        Ok(sim)
    }

    pub fn now(&self) -> &Rat {
        &self.now
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn service(&self, name: &str) -> Option<&ParticipationService> {
        let i = self.cfg.index_of(name)?;
        self.services.get(&i).map(|s| &s.ledger)
    }

    fn honest(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].role != Role::Attacker)
    }

    /// Tips of all honest participants.
    pub fn fork_report(&self) -> ForkReport {
        let views: Vec<&ChainView> = self.honest().map(|i| &self.nodes[i].view).collect();
        detect_forks(&views)
    }

    fn latency(&mut self) -> Rat {
        match &self.cfg.latency {
            Latency::Fixed { ticks } => ticks.clone(),
            Latency::Uniform { lo, hi } => {
                let lo = lo.to_f64();
                let hi = hi.to_f64();
                let x = if hi > lo { self.rng.random_range(lo..=hi) } else { lo };
                Rat::from_f64_grid(x, 1000)
            }
        }
    }

    fn separated(&self, a: usize, b: usize) -> bool {
        self.partition.as_ref().is_some_and(|(_, g)| g[a] != g[b])
    }

    fn send(&mut self, from: usize, to: usize, msg: Msg) {
        if self.separated(from, to) {
            return;
        }
        let d = self.latency();
        let t = &self.now + &d;
        self.queue.push(t, Payload::Deliver { to, msg });
    }

    fn broadcast(&mut self, from: usize, msg: Msg) {
        for to in 0..self.nodes.len() {
            if to != from {
                self.send(from, to, msg.clone());
            }
        }
    }

    fn nonce(&mut self) -> Nonce {
        self.rng.random()
    }

    fn restart_mining(&mut self, i: usize) {
        let node = &mut self.nodes[i];
        node.mine_gen += 1;
        node.template = None;
        if self.stopped || !node.role.mines() || node.hash_power <= 0.0 {
            return;
        }
        let key = node.wallet.as_ref().expect("miners hold keys").key();
        let state = node.view.state();
        let txs = select_transactions(state, &self.params, &node.mempool, self.cfg.mining.max_block_txs);
        let Ok(block) = assemble_block(state, &self.params, key, txs, Vec::new(), SOLVE_BUDGET) else {
            return;
        };
        let rate = node.hash_power / self.total_power * self.hash_rate;
        let ticks = match self.cfg.mining.mode {
            MiningMode::Sampled => {
                let work = block.step.m as f64 * 2f64.powf(self.params.alpha as f64 * block.step.n as f64);
                Exp::new(rate / work).expect("positive rate").sample(&mut self.rng)
            }
            MiningMode::Hashcash => (block.step.s.0 + 1) as f64 / rate,
        };
        let millis = (ticks * 1000.0).ceil().clamp(1.0, 1e15) as u64;
        node.template = Some(block);
        let gen = node.mine_gen;
        let t = &self.now + &Rat::new(millis, 1000u64);
        self.queue.push(t, Payload::Mine { node: i, gen });
    }

    fn record(&mut self, seq: u64, kind: &str, node: usize, detail: &str) {
        self.events += 1;
        let line = format!("{}|{seq}|{kind}|{node}|{detail}\n", self.now);
        self.trace.update(line.as_bytes());
    }

    /// Processes the next event. `false` when the queue is empty.
    pub fn step(&mut self) -> bool {
        let Some(ev) = self.queue.pop() else { return false };
        self.now = ev.time;
        match ev.payload {
            Payload::Mine { node, gen } => {
                if self.stopped || gen != self.nodes[node].mine_gen {
                    return true;
                }
                self.mined(ev.seq, node);
            }
            Payload::Deliver { to, msg } => match msg {
                Msg::Tx(bytes) => {
                    self.record(ev.seq, "tx", to, &hex::encode(&bytes[..bytes.len().min(8)]));
                    self.tx_arrived(to, &bytes);
                }
                Msg::Block(s) => {
                    self.record(ev.seq, "block", to, &s.digest.to_hex());
                    self.blocks_arrived(to, std::slice::from_ref(&s));
                }
                Msg::Sync(list) => {
                    let tip = list.last().map(|s| s.digest.to_hex()).unwrap_or_default();
                    self.record(ev.seq, "sync", to, &tip);
                    self.blocks_arrived(to, &list);
                }
            },
            Payload::Action(i) => {
                if self.stopped {
                    return true;
                }
                self.record(ev.seq, "action", i, "");
                let a = self.cfg.actions[i].clone();
                self.act(a);
            }
            Payload::Heal(id) => {
                self.record(ev.seq, "heal", 0, &id.to_string());
                self.heal(id);
            }
        }
        self.check_attacks();
        true
    }

    fn mined(&mut self, seq: u64, i: usize) {
        let Some(block) = self.nodes[i].template.take() else { return };
        let sealed = Rc::new(Sealed { digest: block.digest(self.params.hash), block });
        self.record(seq, "mined", i, &sealed.digest.to_hex());
        let node = &mut self.nodes[i];
        node.known.insert(sealed.digest.clone(), sealed.clone());
        if node.view.extend(&sealed.block).is_err() {
            self.metrics.invalid_blocks += 1;
            self.restart_mining(i);
            return;
        }
        if !node.is_withholding() {
            self.broadcast(i, Msg::Block(sealed));
        }
        self.view_changed(i, Vec::new());
    }

    fn tx_arrived(&mut self, i: usize, bytes: &[u8]) {
        let Some(_) = self.nodes[i].place(bytes) else { return };
        let node = &self.nodes[i];
        let room = node.template.as_ref().is_some_and(|b| b.txs.len() < self.cfg.mining.max_block_txs);
        if room {
            self.restart_mining(i);
        }
    }

    fn blocks_arrived(&mut self, i: usize, list: &[Rc<Sealed>]) {
        let Some(last) = list.last() else { return };
        {
            let node = &mut self.nodes[i];
            for s in list {
                node.known.entry(s.digest.clone()).or_insert_with(|| s.clone());
            }
        }
        if self.nodes[i].is_withholding() {
            let node = &mut self.nodes[i];
            let public = node.public.as_mut().expect("withholding");
            if let Some(path) = path_to(public, &node.known, last) {
                if !path.is_empty() {
                    let _ = public.adopt(&path, &self.rule);
                }
            }
            return;
        }
        if !self.attach(i, last.clone()) {
            return;
        }
        // Parents may have arrived for waiting blocks.
        loop {
            let orphans = std::mem::take(&mut self.nodes[i].orphans);
            let before = orphans.len();
            for o in orphans {
                self.attach(i, o);
            }
            if self.nodes[i].orphans.len() == before {
                break;
            }
        }
    }

    /// Tries to switch node `i` to the chain ending in `tip`. Returns false
    /// if `tip` could not be connected yet.
    fn attach(&mut self, i: usize, tip: Rc<Sealed>) -> bool {
        let node = &mut self.nodes[i];
        let Some(path) = path_to(&node.view, &node.known, &tip) else {
            if !node.orphans.iter().any(|o| o.digest == tip.digest) {
                node.orphans.push(tip);
            }
            return false;
        };
        if path.is_empty() {
            return true;
        }
        let old_len = node.view.len();
        let fork = path[0].k;
        let dropped: Vec<_> = node.view.blocks()[fork.min(old_len) as usize..].iter().flat_map(|b| b.txs.clone()).collect();
        match node.view.adopt(&path, &self.rule) {
            Ok(Decision::Keep) => {}
            Ok(_) => self.view_changed(i, dropped),
            Err(ChooseError::BelowCheckpoint { .. }) => self.metrics.checkpoint_rejections += 1,
            Err(_) => self.metrics.invalid_blocks += 1,
        }
        true
    }

    fn view_changed(&mut self, i: usize, dropped: Vec<crate::ledger::Transaction>) {
        let node = &mut self.nodes[i];
        for t in dropped {
            node.accept_tx(t);
        }
        node.prune_mempool();
        self.restart_mining(i);
        self.update_latency(i);
        if self.cfg.metrics.supply_samples && Some(i) == self.honest().next() {
            self.sample_supply();
        }
        if self.services.contains_key(&i) {
            self.service_view_changed(i);
        }
        if self.cfg.metrics.track_forks {
            self.track_forks();
        }
    }

    fn update_latency(&mut self, i: usize) {
        let view = &self.nodes[i].view;
        let name = &self.nodes[i].name;
        for (id, &ix) in &self.latency_idx {
            let l = &mut self.metrics.tx_latency[ix];
            if l.confirmed.is_none() && &l.from == name && view.contains_tx(id) {
                l.confirmed = Some(self.now.clone());
            }
        }
    }

    fn sample_supply(&mut self) {
        let Some(i) = self.honest().next() else { return };
        let v = &self.nodes[i].view;
        self.metrics.supply.push(SupplySample {
            time: self.now.clone(),
            height: v.len().saturating_sub(1),
            minted: v.state().minted_total,
        });
    }

    fn track_forks(&mut self) {
        let report = self.fork_report();
        match (report.is_empty(), self.fork_open) {
            (false, None) => {
                self.fork_open = Some(self.metrics.forks.len());
                self.metrics.forks.push(ForkEpisode { start: self.now.clone(), end: None, max_tips: report.tips.len() });
                self.metrics.fork_reports.push(ForkRecord { time: self.now.clone(), report });
            }
            (false, Some(ix)) => {
                let e = &mut self.metrics.forks[ix];
                e.max_tips = e.max_tips.max(report.tips.len());
            }
            (true, Some(ix)) => {
                self.metrics.forks[ix].end = Some(self.now.clone());
                self.fork_open = None;
            }
            (true, None) => {}
        }
    }

    fn amount(&self, s: &str) -> Amount {
        self.params.units(s).expect("validated amount")
    }

    fn fee(&self, s: &Option<String>) -> Amount {
        s.as_deref().map_or(self.params.min_fee, |f| self.amount(f))
    }

    fn address_of(&self, name: &str) -> crate::crypto::Address {
        let i = self.cfg.index_of(name).expect("validated");
        self.nodes[i].address().expect("validated key holder")
    }

    /// Signs an order with the wallet of `i` and publishes it.
    fn submit(&mut self, i: usize, order: TransferOrder, seq: Option<u64>, publish: bool) -> Option<TxId> {
        let nonce = self.nonce();
        let node = &mut self.nodes[i];
        let state = node.view.state();
        let wallet = node.wallet.as_mut()?;
        let bytes = match seq {
            Some(s) => wallet.construct_at(s, &order, nonce),
            None => wallet.construct(state, &order, nonce),
        };
        let tx = node.place(&bytes)?;
        let id = tx.id();
        if publish {
            self.broadcast(i, Msg::Tx(Rc::new(bytes)));
        }
        let room = self.nodes[i].template.as_ref().is_some_and(|b| b.txs.len() < self.cfg.mining.max_block_txs);
        if room {
            self.restart_mining(i);
        }
        Some(id)
    }

    fn act(&mut self, action: Action) {
        match action {
            Action::Transfer { from, to, amount, fee, .. } => {
                let i = self.cfg.index_of(&from).expect("validated");
                let order = TransferOrder { to: self.address_of(&to), amount: self.amount(&amount), fee: self.fee(&fee) };
                if let Some(id) = self.submit(i, order, None, true) {
                    self.latency_idx.insert(id, self.metrics.tx_latency.len());
                    self.metrics.tx_latency.push(TxLatency {
                        tx: id.to_hex(),
                        from,
                        submitted: self.now.clone(),
                        confirmed: None,
                    });
                }
            }
            Action::Partition { groups, heal, .. } => {
                let mut gid = vec![groups.len(); self.nodes.len()];
                for (g, names) in groups.iter().enumerate() {
                    for n in names {
                        gid[self.cfg.index_of(n).expect("validated")] = g;
                    }
                }
                self.partitions += 1;
                self.partition = Some((self.partitions, gid));
                if let Some(h) = heal {
                    let at = if h < self.now { self.now.clone() } else { h };
                    self.queue.push(at, Payload::Heal(self.partitions));
                }
            }
            Action::Deposit { service, user, from, amount, fee, .. } => {
                let s = self.cfg.index_of(&service).expect("validated");
                let i = self.cfg.index_of(&from).expect("validated");
                let amount = self.amount(&amount);
                let order = TransferOrder { to: self.address_of(&service), amount, fee: self.fee(&fee) };
                match self.submit(i, order, None, true) {
                    Some(id) => self.services.get_mut(&s).expect("service").deposits.push((id, user, amount)),
                    None => self.service_event(s, "deposit", Some(user), amount, Some("payment not placed".into())),
                }
            }
            Action::Withdraw { service, user, to, amount, fee, .. } => {
                let s = self.cfg.index_of(&service).expect("validated");
                let amount = self.amount(&amount);
                let fee = self.fee(&fee);
                let holdings = self.holdings(s);
                let res = self.services.get_mut(&s).expect("service").ledger.withdraw(&user, amount, fee, holdings);
                match res {
                    Ok(()) => {
                        let order = TransferOrder { to: self.address_of(&to), amount, fee };
                        if let Some(id) = self.submit(s, order, None, true) {
                            self.services.get_mut(&s).expect("service").outflows.push((id, amount.checked_add(fee).expect("bounded")));
                        }
                        self.service_event(s, "withdraw", Some(user), amount, None);
                    }
                    Err(e) => self.service_event(s, "withdraw", Some(user), amount, Some(e.to_string())),
                }
                self.check_solvency(s);
            }
            Action::ClaimTransfer { service, from, to, amount, .. } => {
                let s = self.cfg.index_of(&service).expect("validated");
                let amount = self.amount(&amount);
                let res = self.services.get_mut(&s).expect("service").ledger.transfer(&from, &to, amount);
                self.service_event(s, "claim-transfer", Some(from), amount, res.err().map(|e| e.to_string()));
                self.check_solvency(s);
            }
            Action::DoubleSpend { attacker, victim, amount, k_c, give_up, .. } => {
                let a = self.cfg.index_of(&attacker).expect("validated");
                let v = self.cfg.index_of(&victim).expect("validated");
                let amount = self.amount(&amount);
                let fee = self.params.min_fee;
                let seq = {
                    let n = &self.nodes[a];
                    n.wallet.as_ref().expect("attacker key").next_seq(n.view.state())
                };
                let own = self.nodes[a].address().expect("attacker key");
                let to_victim = TransferOrder { to: self.nodes[v].address().expect("victim key"), amount, fee };
                let to_self = TransferOrder { to: own, amount, fee };
                // The private twin goes into the attacker's own pool only.
                self.nodes[a].public = Some(self.nodes[a].view.clone());
                let fork_len = self.nodes[a].view.len();
                let Some(t2) = self.submit(a, to_self, Some(seq), false) else { return };
                let nonce = self.nonce();
                let bytes = self.nodes[a].wallet.as_mut().expect("attacker key").construct_at(seq, &to_victim, nonce);
                let t1 = crate::ledger::Transaction::from_bytes(&bytes).expect("own encoding").id();
                self.broadcast(a, Msg::Tx(Rc::new(bytes)));
                self.attacks.push(Attack {
                    kind: AttackKind::DoubleSpend { victim: v, t1, t2, k_c, give_up, acted: None },
                    attacker: a,
                    fork_len,
                    started: self.now.clone(),
                    released_len: fork_len,
                    done: false,
                });
            }
            Action::MajorityRewrite { attacker, depth, .. } => {
                let a = self.cfg.index_of(&attacker).expect("validated");
                let node = &mut self.nodes[a];
                let len = node.view.len();
                let fork_len = len.saturating_sub(depth).max(1).min(len);
                let private = ChainView::from_blocks(self.params.clone(), &node.view.blocks()[..fork_len as usize])
                    .expect("own chain is valid");
                node.public = Some(std::mem::replace(&mut node.view, private));
                self.attacks.push(Attack {
                    kind: AttackKind::Majority,
                    attacker: a,
                    fork_len,
                    started: self.now.clone(),
                    released_len: fork_len,
                    done: false,
                });
                self.restart_mining(a);
            }
        }
    }

    fn heal(&mut self, id: u64) {
        if self.partition.as_ref().map(|p| p.0) != Some(id) {
            return;
        }
        self.partition = None;
        for i in 0..self.nodes.len() {
            let node = &self.nodes[i];
            if node.is_withholding() || node.view.is_empty() {
                continue;
            }
            let chain: Vec<Rc<Sealed>> = (0..node.view.len())
                .map(|k| node.known[node.view.digest_at(k).expect("in range")].clone())
                .collect();
            self.broadcast(i, Msg::Sync(Rc::new(chain)));
        }
    }

    fn holdings(&self, s: usize) -> Amount {
        let st = &self.services[&s];
        let node = &self.nodes[st.node];
        let bal = node.view.state().balance(&node.address().expect("service key"));
        st.outflows.iter().fold(bal, |b, (_, v)| b.saturating_sub(*v))
    }

    fn service_event(&mut self, s: usize, op: &str, user: Option<String>, amount: Amount, error: Option<String>) {
        self.metrics.service_events.push(ServiceEvent {
            time: self.now.clone(),
            service: self.nodes[s].name.clone(),
            op: op.into(),
            user,
            amount,
            error,
        });
    }

    fn check_solvency(&mut self, s: usize) {
        let holdings = self.holdings(s);
        let st = self.services.get_mut(&s).expect("service");
        let res = st.ledger.check_solvency(holdings);
        let now_insolvent = res.is_err();
        let changed = now_insolvent != st.insolvent;
        st.insolvent = now_insolvent;
        if changed {
            let claims = st.ledger.total_claims();
            self.service_event(s, "solvency", None, claims, res.err().map(|e| e.to_string()));
        }
    }

    fn service_view_changed(&mut self, s: usize) {
        let view = &self.nodes[s].view;
        let st = self.services.get_mut(&s).expect("service");
        st.outflows.retain(|(id, _)| !view.contains_tx(id));
        let (arrived, waiting): (Vec<_>, Vec<_>) = std::mem::take(&mut st.deposits).into_iter().partition(|(id, _, _)| view.contains_tx(id));
        st.deposits = waiting;
        for (_, user, amount) in arrived {
            let holdings = self.holdings(s);
            let res = self.services.get_mut(&s).expect("service").ledger.deposit(&user, amount, holdings);
            self.service_event(s, "deposit", Some(user), amount, res.err().map(|e| e.to_string()));
        }
        self.check_solvency(s);
    }

    fn check_attacks(&mut self) {
        for ix in 0..self.attacks.len() {
            if self.attacks[ix].done {
                continue;
            }
            let a = self.attacks[ix].attacker;
            let (priv_w, priv_len) = (self.nodes[a].view.total_difficulty(), self.nodes[a].view.len());
            let public = self.nodes[a].public.as_ref().expect("attacking");
            let (pub_w, pub_len) = (public.total_difficulty(), public.len());
            let fork_len = self.attacks[ix].fork_len;
            let mut outcome = None;
            let may_release = match &mut self.attacks[ix].kind {
                AttackKind::DoubleSpend { victim, t1, t2, k_c, give_up, acted } => {
                    let v = &self.nodes[*victim];
                    if acted.is_none() {
                        let seen = if *k_c == 0 { v.mempool_ids.contains(t1) || v.view.contains_tx(t1) } else { v.view.confirmations(t1) >= *k_c };
                        if seen {
                            *acted = Some(self.now.clone());
                        }
                    }
                    if acted.is_some() && v.view.contains_tx(t2) {
                        outcome = Some(true);
                    } else if pub_len >= priv_len + *give_up {
                        outcome = Some(false);
                    }
                    acted.is_some()
                }
                AttackKind::Majority => {
                    if priv_len > fork_len {
                        let mine = self.nodes[a].view.digest_at(fork_len);
                        let all = self.honest().all(|h| self.nodes[h].view.digest_at(fork_len) == mine);
                        if all {
                            outcome = Some(true);
                        }
                    }
                    true
                }
            };
            if outcome.is_none() && may_release && priv_w > pub_w && priv_len > self.attacks[ix].released_len {
                self.attacks[ix].released_len = priv_len;
                let node = &self.nodes[a];
                let chain: Vec<Rc<Sealed>> = (fork_len..priv_len)
                    .map(|k| node.known[node.view.digest_at(k).expect("in range")].clone())
                    .collect();
                self.broadcast(a, Msg::Sync(Rc::new(chain)));
            }
            if let Some(success) = outcome {
                self.finish_attack(ix, success);
            }
        }
    }

    fn finish_attack(&mut self, ix: usize, success: bool) {
        let at = &mut self.attacks[ix];
        at.done = true;
        let a = at.attacker;
        let (kind, k_c, acted) = match &at.kind {
            AttackKind::DoubleSpend { k_c, acted, .. } => ("double-spend", Some(*k_c), acted.clone()),
            AttackKind::Majority => ("majority-rewrite", None, None),
        };
        let private_blocks = self.nodes[a].view.len().saturating_sub(at.fork_len);
        self.metrics.attacks.push(AttackOutcome {
            kind: kind.into(),
            attacker: self.nodes[a].name.clone(),
            k_c,
            success,
            started: at.started.clone(),
            victim_acted: acted,
            resolved: self.now.clone(),
            private_blocks,
        });
        // Back to honest mining on the best chain known.
        let node = &mut self.nodes[a];
        if let Some(public) = node.public.take() {
            if public.total_difficulty() > node.view.total_difficulty() {
                node.view = public;
            }
        }
        self.restart_mining(a);
    }

    fn should_stop(&self) -> bool {
        let s = &self.cfg.stop;
        if self.events >= s.max_events {
            return true;
        }
        if let Some(n) = s.blocks {
            if self.honest().any(|i| self.nodes[i].view.len() >= n) {
                return true;
            }
        }
        if s.on_attack_outcome && !self.attacks.is_empty() && self.attacks.iter().all(|a| a.done) {
            return true;
        }
        false
    }

    /// Processes events up to and including time `t`.
    pub fn run_until(&mut self, t: &Rat) {
        while self.queue.peek_time().is_some_and(|x| x <= t) {
            self.step();
        }
        if &self.now < t {
            self.now = t.clone();
        }
    }

    /// Runs to the stop condition, then lets messages in flight settle with
    /// mining switched off.
    pub fn run_to_end(mut self) -> RunOutput {
        loop {
            if self.should_stop() {
                break;
            }
            if let (Some(limit), Some(next)) = (&self.cfg.stop.time, self.queue.peek_time()) {
                if next > limit {
                    self.now = limit.clone();
                    break;
                }
            }
            if !self.step() {
                break;
            }
        }
        self.stopped = true;
        while self.step() {}
        self.finish()
    }

    fn finish(mut self) -> RunOutput {
        for ix in 0..self.attacks.len() {
            if !self.attacks[ix].done {
                self.finish_attack(ix, false);
            }
        }
        let first = self.honest().next();
        if let Some(i) = first {
            let names: HashMap<_, _> = self.nodes.iter().filter_map(|n| n.address().map(|a| (a, n.name.clone()))).collect();
            for b in self.nodes[i].view.blocks() {
                let name = names.get(&b.step.d).cloned().unwrap_or_else(|| b.step.d.short());
                *self.metrics.blocks_won.entry(name.clone()).or_default() += 1;
                let e = self.metrics.miner_earnings.entry(name).or_default();
                *e = e.checked_add(b.step.g).and_then(|x| x.checked_add(b.step.h)).expect("bounded supply");
            }
        }
        RunOutput {
            names: self.nodes.iter().map(|n| n.name.clone()).collect(),
            views: self.nodes.into_iter().map(|n| n.view).collect(),
            metrics: self.metrics,
            trace_digest: hex::encode(self.trace.finalize()),
            events: self.events,
            end_time: self.now,
            seed: self.cfg.seed.unwrap_or(0),
        }
    }
}

/// Blocks from the first one `view` lacks up to `tip`, walking parents
/// through `known`. `None` if an ancestor is missing.
fn path_to(view: &ChainView, known: &HashMap<crate::crypto::Digest, Rc<Sealed>>, tip: &Rc<Sealed>) -> Option<Vec<Block>> {
    let mut chain = Vec::new();
    let mut cur = tip.clone();
    loop {
        let k = cur.block.k;
        if view.digest_at(k) == Some(&cur.digest) {
            break;
        }
        chain.push(cur.block.clone());
        if k == 0 {
            break;
        }
        if view.digest_at(k - 1).is_some() && view.digest_at(k - 1) == cur.block.prev.as_ref() {
            break;
        }
        let parent = known.get(cur.block.prev.as_ref()?)?.clone();
        if parent.block.k + 1 != k {
            return None;
        }
        cur = parent;
    }
    chain.reverse();
    Some(chain)
}

/// Runs a scenario to completion.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, NetsimError> {
    Ok(Sim::new(cfg.clone())?.run_to_end())
}
