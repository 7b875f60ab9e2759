'use strict';

class LruCache {
  constructor(capacity) {
    if (capacity <= 0) {
      throw new RangeError('capacity must be positive');
    }
    this.capacity = capacity;
    this.map = new Map();
    this.hits = 0;
    this.misses = 0;
  }

  get(key) {
    if (!this.map.has(key)) {
      this.misses += 1;
      return undefined;
    }
    const value = this.map.get(key);
    this.map.delete(key);
    this.map.set(key, value);
    this.hits += 1;
    return value;
  }

  set(key, value) {
    if (this.map.has(key)) {
      this.map.delete(key);
    } else if (this.map.size >= this.capacity) {
      const oldest = this.map.keys().next().value;
      this.map.delete(oldest);
    }
    this.map.set(key, value);
    return this;
  }

  stats() {
    const total = this.hits + this.misses;
    return {
      hits: this.hits,
      misses: this.misses,
      ratio: total === 0 ? 0 : this.hits / total,
    };
  }
}

const cache = new LruCache(2);
cache.set('a', 1).set('b', 2);
cache.get('a');
cache.set('c', 3);
console.log(cache.get('b'), cache.stats());

module.exports = { LruCache };
