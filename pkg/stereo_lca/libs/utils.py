import hashlib
import json
import functools
from concurrent.futures import ThreadPoolExecutor


def map_value(x, from_min, from_max, to_min, to_max):
    return (x - from_min) * (to_max - to_min) / (from_max - from_min) + to_min

def log_error(func):
    '''
    Log any exception through self.log with traceback, then re-raise it so
    the caller (normally the CLI) can turn it into an exit code.
    '''
    @functools.wraps(func)
    def wrapper(self, *args, **kwargs):
        try:
            return func(self, *args, **kwargs)
        except Exception as e:
            self.log.exception(str(e))
            raise
    return wrapper

def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(',', ':'), default=_json_default)

def _json_default(obj):
    # numpy scalars and arrays
    if hasattr(obj, 'tolist'):
        return obj.tolist()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")

def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()

def file_sha256(path):
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            h.update(chunk)
    return h.hexdigest()

def write_json(path, obj):
    with open(path, 'w') as f:
        f.write(json.dumps(obj, sort_keys=True, indent=2, default=_json_default))
        f.write('\n')

def read_json(path):
    with open(path, 'r') as f:
        return json.load(f)

def resident_memory():
    import psutil
    return psutil.Process().memory_info().rss

def ordered_map(func, items, workers=1):
    '''
    Map func over items on a thread pool. Results come back in input order,
    so the worker count never changes what the caller reduces.
    '''
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))

def format_bytes(size):
    units = ['B', 'KB', 'MB', 'GB', 'TB', 'PB']
    unit = 0
    while size >= 1024 and unit < len(units)-1:
        size /= 1024
        unit += 1
    return f"{size:.1f} {units[unit]}"
