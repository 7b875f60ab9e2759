function createCache(limit) {
  if (!(limit > 0)) {
    throw new Error(`invalid limit ${limit}`);
  }
  const entries = new Map();
  let hits = 0;
  let misses = 0;

  function touch(key, value) {
    entries.delete(key);
    entries.set(key, value);
  }

  function evict() {
    for (const key of entries.keys()) {
      entries.delete(key);
      return key;
    }
    return null;
  }

  return {
    get(key) {
      if (entries.has(key)) {
        const value = entries.get(key);
        touch(key, value);
        hits++;
        return value;
      }
      misses++;
      return undefined;
    },
    set(key, value) {
      if (!entries.has(key) && entries.size === limit) {
        evict();
      }
      touch(key, value);
    },
    size() {
      return entries.size;
    },
    stats() {
      const ratio = hits + misses > 0 ? hits / (hits + misses) : 0;
      return { hits, misses, ratio };
    },
  };
}

const cache = createCache(2);
cache.set('a', 1);
cache.set('b', 2);
cache.get('a');
cache.set('c', 3);
console.log(cache.get('b'), cache.stats());
