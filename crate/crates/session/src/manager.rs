use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use morai_core::agent::{load_agent, AgentKind, CnnAgent, CnnConfig, MarkovModel, Partner};
use morai_core::TileManifest;

use crate::clock::{Clock, LogicalClock, SystemClock};
use crate::session::{Session, SessionConfig};
use crate::SessionError;

/// Partners that new sessions start from. Each session gets its own copy;
/// the CNN's dense rows are shared copy-on-write.
#[derive(Debug, Clone, Default)]
pub struct Templates {
    pub cnn: Option<CnnAgent<f32>>,
    pub markov: Option<MarkovModel>,
}

impl Templates {
    /// Builds the partner for `config`, from its checkpoint if it names
    /// one. A CNN session without any template starts from a freshly
    /// initialised network seeded by the session seed.
    pub fn partner(&self, config: &SessionConfig) -> Result<Partner, SessionError> {
        if let Some(dir) = &config.checkpoint {
            let (partner, _) = load_agent(dir).map_err(|e| SessionError::BadCheckpoint(e.to_string()))?;
            return self.configure(partner, config);
        }
        match config.agent {
            AgentKind::Cnn => {
                let cnn_config = CnnConfig { tau: config.tau, cap: config.cap };
                let agent = match &self.cnn {
                    Some(t) => {
                        let mut a = t.clone();
                        a.end_session();
                        a.set_config(cnn_config)?;
                        a
                    }
                    None => CnnAgent::new(cnn_config, config.seed)?,
                };
                Ok(Partner::cnn(agent))
            }
            AgentKind::Markov => {
                let model =
                    self.markov.clone().ok_or_else(|| SessionError::BadConfig("no Markov model is loaded".into()))?;
                Ok(Partner::markov(model, config.cap, config.seed)?)
            }
        }
    }

    fn configure(&self, partner: Partner, config: &SessionConfig) -> Result<Partner, SessionError> {
        if partner.kind() != config.agent {
            return Err(SessionError::BadCheckpoint(format!(
                "checkpoint holds a {} agent, session asks for {}",
                partner.kind(),
                config.agent
            )));
        }
        Ok(match partner {
            Partner::Cnn(mut a) => {
                a.end_session();
                a.set_config(CnnConfig { tau: config.tau, cap: config.cap })?;
                Partner::Cnn(a)
            }
            Partner::Markov { model, .. } => Partner::markov(model, config.cap, config.seed)?,
        })
    }
}

/// How session timestamps are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    #[default]
    Wall,
    /// One tick per reading; makes logs reproducible.
    Logical,
}

/// All live and closed sessions of one service. Each session sits behind
/// its own mutex, so operations on one session are serialized while
/// different sessions proceed independently.
#[derive(Debug)]
pub struct SessionManager {
    templates: Templates,
    defaults: SessionConfig,
    sessions_dir: Option<PathBuf>,
    manifest: Arc<TileManifest>,
    clock_mode: ClockMode,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionManager {
    pub fn new(templates: Templates, defaults: SessionConfig, sessions_dir: Option<PathBuf>) -> Self {
        Self {
            templates,
            defaults,
            sessions_dir,
            manifest: Arc::new(TileManifest::builtin()),
            clock_mode: ClockMode::Wall,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn with_clock_mode(mut self, mode: ClockMode) -> Self {
        self.clock_mode = mode;
        self
    }

    pub fn defaults(&self) -> &SessionConfig {
        &self.defaults
    }

    pub fn sessions_dir(&self) -> Option<&Path> {
        self.sessions_dir.as_deref()
    }

    pub fn manifest(&self) -> &Arc<TileManifest> {
        &self.manifest
    }

    fn clock(&self) -> Box<dyn Clock> {
        match self.clock_mode {
            ClockMode::Wall => Box::new(SystemClock::new()),
            ClockMode::Logical => Box::<LogicalClock>::default(),
        }
    }

    /// Creates a session with a fresh random id.
    pub fn create(&self, config: SessionConfig) -> Result<String, SessionError> {
        self.create_with_id(uuid::Uuid::new_v4().to_string(), config)
    }

    pub fn create_with_id(&self, id: String, config: SessionConfig) -> Result<String, SessionError> {
        config.validate()?;
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(SessionError::BadConfig(format!("session id {id:?} must be non-empty [A-Za-z0-9_-]")));
        }
        if self.read_map().contains_key(&id) {
            return Err(SessionError::BadConfig(format!("session id {id:?} already exists")));
        }
        let partner = self.templates.partner(&config)?;
        let session = Session::create(id.clone(), config, partner, self.clock(), self.manifest.clone())?;
        tracing::info!(session = %id, "session created");
        self.write_map().insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.read_map().get(id).cloned().ok_or_else(|| SessionError::NotFound(id.to_string()))
    }

    /// Runs `f` with the session locked.
    pub fn with_session<R>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<R, SessionError>,
    ) -> Result<R, SessionError> {
        let handle = self.get(id)?;
        let mut guard = lock(&handle)?;
        f(&mut guard)
    }

    pub fn len(&self) -> usize {
        self.read_map().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn read_map(&self) -> std::sync::RwLockReadGuard<'_, HashMap<String, Arc<Mutex<Session>>>> {
        self.sessions.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write_map(&self) -> std::sync::RwLockWriteGuard<'_, HashMap<String, Arc<Mutex<Session>>>> {
        self.sessions.write().unwrap_or_else(|e| e.into_inner())
    }
}

/// A panic while a session was locked leaves it in an unknown state, so
/// the session refuses further work.
fn lock(handle: &Mutex<Session>) -> Result<MutexGuard<'_, Session>, SessionError> {
    handle.lock().map_err(|_| SessionError::Poisoned)
}
