using System;
using System.Collections.Generic;
using System.Linq;

namespace Shop
{
    public class Cart
    {
        private readonly Dictionary<string, (decimal Price, int Quantity)> _lines = new();

        public void Add(string name, decimal price, int quantity = 1)
        {
            if (quantity < 1)
                throw new ArgumentException("quantity must be at least one", nameof(quantity));

            if (_lines.TryGetValue(name, out var line))
            {
                _lines[name] = (price, line.Quantity + quantity);
            }
            else
            {
                _lines[name] = (price, quantity);
            }
        }

        public bool Remove(string name) => _lines.Remove(name);

        public decimal Subtotal() =>
            _lines.Values.Aggregate(0m, (acc, line) => acc + line.Price * line.Quantity);

        public decimal Total(decimal taxRate)
        {
            if (taxRate < 0)
            {
                throw new ArgumentOutOfRangeException(nameof(taxRate));
            }
            return decimal.Round(Subtotal() * (1 + taxRate), 2);
        }

        public int Count
        {
            get { return _lines.Values.Sum(line => line.Quantity); }
        }
    }

    internal static class Program
    {
        private static void Main()
        {
            var cart = new Cart();
            cart.Add("book", 12.5m, 2);
            cart.Add("pen", 1.2m);
            cart.Remove("none");
            Console.WriteLine(cart.Count + " items, " + cart.Total(0.2m));
        }
    }
}
