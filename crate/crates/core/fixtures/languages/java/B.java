import java.util.LinkedList;
import java.util.List;
import java.util.TreeMap;

public class Inventory {
    private final TreeMap<String, Integer> stock = new TreeMap<>();
    private final List<String> events = new LinkedList<>();

    public void add(String name, int amount) {
        if (amount < 1) {
            throw new IllegalArgumentException("bad amount: " + amount);
        }
        stock.merge(name, amount, Integer::sum);
        events.add(String.format("add %s %d", name, amount));
    }

    public boolean remove(String name, int amount) {
        int have = stock.getOrDefault(name, 0);
        if (have < amount) {
            return false;
        }
        int left = have - amount;
        if (left == 0) {
            stock.remove(name);
        } else {
            stock.put(name, left);
        }
        events.add(String.format("remove %s %d", name, amount));
        return true;
    }

    public int total() {
        return stock.values().stream().mapToInt(Integer::intValue).sum();
    }

    public int distinctItems() {
        return stock.size();
    }

    public List<String> history() {
        return List.copyOf(events);
    }

    public static void main(String[] args) {
        Inventory inventory = new Inventory();
        inventory.add("apple", 3);
        inventory.add("pear", 2);
        if (!inventory.remove("apple", 1)) {
            System.out.println("remove failed");
        }
        System.out.println(inventory.total() + " / " + inventory.distinctItems());
    }
}
