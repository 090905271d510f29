//! Request/response access from worker threads to the host's stores.

use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};

use crate::services::{DataService, NodeDataService, ServiceError, Services, StorageDriver};

#[derive(Debug, Clone, Copy)]
enum Target {
    Data(usize),
    NodeData,
}

#[derive(Debug)]
enum Op {
    Get(String),
    Put(String, String),
    Delete(String),
    Keys,
}

#[derive(Debug)]
enum Reply {
    Text(Option<String>),
    Done,
    Keys(Vec<String>),
}

struct Request {
    target: Target,
    op: Op,
    reply: Sender<Result<Reply, ServiceError>>,
}

/// Host end: answers requests on its own thread until every proxy is gone.
pub(crate) fn spawn_server(host: &Services) -> ProxyFactory {
    let (tx, rx) = mpsc::channel::<Request>();
    let data: Vec<Arc<DataService>> = host.data_services().to_vec();
    let node_data = Arc::clone(host.node_data());
    std::thread::Builder::new()
        .name("posflow-service-proxy".into())
        .spawn(move || serve(rx, data, node_data))
        .expect("spawn service proxy thread");
    ProxyFactory {
        tx: Mutex::new(tx),
        data: host
            .data_services()
            .iter()
            .map(|s| (s.type_name().to_string(), s.name().to_string()))
            .collect(),
    }
}

fn serve(rx: Receiver<Request>, data: Vec<Arc<DataService>>, node_data: Arc<NodeDataService>) {
    for req in rx {
        let result = match req.target {
            Target::Data(i) => {
                let service = &data[i];
                match req.op {
                    Op::Get(k) => service.get_text(&k).map(Reply::Text),
                    // Inserting through the service keeps its listeners informed.
                    Op::Put(k, v) => service.insert_text(&k, v).map(|_| Reply::Done),
                    Op::Delete(k) => service.driver().delete(&k).map(Reply::Text),
                    Op::Keys => service.driver().keys().map(Reply::Keys),
                }
            }
            Target::NodeData => {
                let driver = node_data.driver();
                match req.op {
                    Op::Get(k) => driver.get(&k).map(Reply::Text),
                    Op::Put(k, v) => driver.put(&k, v).map(|_| Reply::Done),
                    Op::Delete(k) => driver.delete(&k).map(Reply::Text),
                    Op::Keys => driver.keys().map(Reply::Keys),
                }
            }
        };
        let _ = req.reply.send(result);
    }
}

/// Builds worker-side services whose stores forward to the host.
pub(crate) struct ProxyFactory {
    tx: Mutex<Sender<Request>>,
    /// (type name, service name) of each host data service, by index.
    data: Vec<(String, String)>,
}

impl ProxyFactory {
    pub(crate) fn services(&self, host: &Services) -> Services {
        let tx = self.tx.lock().unwrap_or_else(|e| e.into_inner()).clone();
        let mut services = Services::new();
        for (i, (type_name, name)) in self.data.iter().enumerate() {
            let driver = Arc::new(ProxyDriver {
                target: Target::Data(i),
                tx: Mutex::new(tx.clone()),
            });
            services.add_data_service(Arc::new(
                DataService::with_driver(type_name.clone(), driver).named(name.clone()),
            ));
        }
        services.set_node_data(Arc::new(NodeDataService::with_driver(Arc::new(
            ProxyDriver {
                target: Target::NodeData,
                tx: Mutex::new(tx),
            },
        ))));
        services.set_time(Arc::clone(host.time()));
        services
    }
}

struct ProxyDriver {
    target: Target,
    tx: Mutex<Sender<Request>>,
}

impl ProxyDriver {
    fn call(&self, op: Op) -> Result<Reply, ServiceError> {
        let (reply, rx) = mpsc::channel();
        self.tx
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .send(Request {
                target: self.target,
                op,
                reply,
            })
            .map_err(|_| ServiceError::Storage("host services are gone".into()))?;
        rx.recv()
            .map_err(|_| ServiceError::Storage("host services did not answer".into()))?
    }
}

fn unexpected() -> ServiceError {
    ServiceError::Storage("unexpected proxy reply".into())
}

impl StorageDriver for ProxyDriver {
    fn get(&self, key: &str) -> Result<Option<String>, ServiceError> {
        match self.call(Op::Get(key.to_string()))? {
            Reply::Text(t) => Ok(t),
            _ => Err(unexpected()),
        }
    }

    fn put(&self, key: &str, value: String) -> Result<(), ServiceError> {
        match self.call(Op::Put(key.to_string(), value))? {
            Reply::Done => Ok(()),
            _ => Err(unexpected()),
        }
    }

    fn delete(&self, key: &str) -> Result<Option<String>, ServiceError> {
        match self.call(Op::Delete(key.to_string()))? {
            Reply::Text(t) => Ok(t),
            _ => Err(unexpected()),
        }
    }

    fn keys(&self) -> Result<Vec<String>, ServiceError> {
        match self.call(Op::Keys)? {
            Reply::Keys(k) => Ok(k),
            _ => Err(unexpected()),
        }
    }
}
